#include <gtest/gtest.h>

#include <json.hpp>

#include "specinit/bounds.hpp"
#include "specinit/datamatrix.hpp"
#include "specinit/errors.hpp"
#include "specinit/metrics.hpp"
#include "specinit/spectral.hpp"
#include "specinit/synthgen.hpp"
#include "test_util.hpp"

using namespace specinit;
using testutil::Rng;

TEST(EvaluateBounds, HandArithmetic) {
  const BoundReport r = evaluate_bounds(3, 10, 0.5, 2.0);
  EXPECT_NEAR(r.lemma1_bound, 0.5 * std::sqrt(60.0), 1e-12);
  EXPECT_NEAR(r.thm3_bound, std::sqrt(60.0), 1e-12);
  EXPECT_NEAR(r.thm3_bound, 7.7460, 5e-5);
  EXPECT_NEAR(r.thm4_bound, 2.0 * std::sqrt(30.0), 1e-12);
  EXPECT_NEAR(r.thm4_bound, 10.9545, 5e-5);
  // (8 + 4 sqrt 2) sqrt 30 / 4 = 18.70042...
  EXPECT_NEAR(r.cor5_bound, 18.70042, 5e-6);
  EXPECT_FALSE(r.surrogate_used);
}

TEST(EvaluateBounds, ZeroPerturbation) {
  const BoundReport r = evaluate_bounds(2, 100, 0.0, 0.3);
  EXPECT_EQ(r.lemma1_bound, 0.0);
  EXPECT_EQ(r.thm3_bound, 0.0);
  EXPECT_EQ(r.thm4_bound, 0.0);
  EXPECT_EQ(r.cor5_bound, 0.0);
}

TEST(EvaluateBounds, ClosedFormsAndScaling) {
  Rng rng(1);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int k = 0; k < 500; ++k) {
    const int d = 2 + k % 2, n = 1 + k % 97;
    const double delta = u(rng), gap = u(rng);
    const BoundReport r = evaluate_bounds(d, n, delta, gap);
    const double dn = d * n;
    EXPECT_NEAR(r.lemma1_bound, 2 * std::sqrt(2 * dn) * delta / gap, 1e-12 * r.lemma1_bound);
    EXPECT_NEAR(r.thm3_bound, 4 * std::sqrt(2 * dn) * delta / gap, 1e-12 * r.thm3_bound);
    EXPECT_NEAR(r.thm4_bound, 8 * std::sqrt(dn) * delta / gap, 1e-12 * r.thm4_bound);
    EXPECT_NEAR(r.thm3_bound + r.thm4_bound, r.cor5_bound, 1e-12 * r.cor5_bound);
    const BoundReport scaled = evaluate_bounds(d, n, 3 * delta, 2 * gap);
    EXPECT_NEAR(scaled.thm3_bound, 1.5 * r.thm3_bound, 1e-12 * r.thm3_bound);
    EXPECT_NEAR(scaled.cor5_bound, 1.5 * r.cor5_bound, 1e-12 * r.cor5_bound);
  }
}

TEST(EvaluateBounds, Errors) {
  EXPECT_THROW(evaluate_bounds(3, 10, 0.5, 0.0), NonPositiveGap);
  EXPECT_THROW(evaluate_bounds(3, 10, 0.5, -1.0), NonPositiveGap);
  EXPECT_THROW(evaluate_bounds(3, 10, -0.5, 1.0), ArgumentError);
}

TEST(RotationOnlyBound, Examples) {
  EXPECT_EQ(rotation_only_bound(3, 10, 0.0, 2.0), 0.0);
  EXPECT_NEAR(rotation_only_bound(3, 10, 0.5, 2.0), std::sqrt(60.0), 1e-12);
  EXPECT_THROW(rotation_only_bound(3, 10, 0.5, 0.0), NonPositiveGap);

  Rng rng(2);
  const RotationSet truth = testutil::random_rotations(3, 12, rng);
  const PoseGraph g = testutil::make_graph(3, 12, testutil::random_edges(12, 8, rng), truth,
                                           Matrix::Zero(3, 12), false, 0.0, rng);
  EXPECT_EQ(rotation_only_bound(g, 0.0), 0.0);
  EXPECT_LE(so_orbit_distance(truth, spectral_initialize(g, Mode::RotationOnly).rotations).distance, 1e-6);
}

// --- spectral gap ---------------------------------------------------------------------

TEST(SpectralGap, Examples) {
  PoseGraph one;
  one.d = 3;
  one.n = 2;
  one.mode = Mode::RotationOnly;
  one.edges.push_back({0, 1, Matrix::Identity(3, 3), Vector(), 1.0, 0.0});
  EXPECT_NEAR(spectral_gap(one), 2.0, 1e-10);

  for (int n : {3, 6, 20}) {
    PoseGraph k;
    k.d = 2;
    k.n = n;
    k.mode = Mode::RotationOnly;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) k.edges.push_back({i, j, Matrix::Identity(2, 2), Vector(), 1.0, 0.0});
    EXPECT_NEAR(spectral_gap(k), n, 1e-8 * n);
  }
}

TEST(SpectralGap, MatchesDenseScalarLaplacian) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const PoseGraph g = testutil::random_graph(3, 8 + 5 * trial, 10, false, 0.3, rng);
    const Vector ev = testutil::ascending_eigenvalues(testutil::dense_scalar_laplacian(g, false));
    EXPECT_NEAR(spectral_gap(g), ev[1], 1e-8 * ev[ev.size() - 1]);
  }
}

TEST(SpectralGap, EqualsConnectionLaplacianGapWhenNoiseless) {
  Rng rng(4);
  for (int trial = 0; trial < 8; ++trial) {
    const int d = 2 + trial % 2;
    const PoseGraph g = testutil::random_graph(d, 40, 40, true, 0.0, rng);
    const double lambda2 = spectral_gap(g);
    EXPECT_NEAR(exact_gap(g, Mode::RotationOnly), lambda2, 1e-8);
    // Full-pose gap dominates the rotational one.
    EXPECT_GE(exact_gap(g, Mode::FullPose), lambda2 - 1e-8);
  }
}

TEST(SpectralGap, Disconnected) {
  Rng rng(5);
  PoseGraph g = testutil::random_graph(3, 5, 2, false, 0.0, rng);
  g.n = 7;
  EXPECT_THROW(spectral_gap(g), DisconnectedGraph);
}

// --- validity on synthetic instances ----------------------------------------------

namespace {

struct Instance {
  GroundTruthInstance inst;
  PoseGraph truth;
};

Instance cube(int s, double kappa, double tau, double p_lc, std::uint64_t seed) {
  CubeParams p;
  p.s = s;
  p.kappa = kappa;
  p.tau = tau;
  p.p_lc = p_lc;
  p.seed = seed;
  Instance out{generate_cube(p), {}};
  out.truth = noiseless_graph(out.inst);
  return out;
}

}  // namespace

// Path-dominated cube graphs have a tightly clustered low spectrum.
TEST(SpectralGap, LargeCubeGapIdentity) {
  const Instance c = cube(10, 1e4, 100, 0.1, 13);
  const double lambda2 = spectral_gap(c.truth);
  const Vector ev = testutil::ascending_eigenvalues(testutil::dense_scalar_laplacian(c.truth, false));
  EXPECT_NEAR(lambda2, ev[1], 1e-8 * ev[ev.size() - 1]);
  EXPECT_NEAR(exact_gap(c.truth, Mode::RotationOnly), lambda2, 1e-8 * ev[ev.size() - 1]);
  EXPECT_GE(exact_gap(c.truth, Mode::FullPose), lambda2 * (1 - 1e-8));
}

TEST(BoundValidity, SpectralEstimateOnCube) {
  const Instance c = cube(4, 1e5, 150, 0.2, 11);
  const BoundReport b = instance_bounds(c.inst.graph, c.truth, Mode::FullPose);
  const RotationSet init = spectral_initialize(c.inst.graph, Mode::FullPose).rotations;
  EXPECT_LE(so_orbit_distance(c.inst.truth.rotations, init).distance, b.thm3_bound);
}

TEST(BoundValidity, RandomInstances) {
  Rng rng(12);
  std::uniform_real_distribution<double> log_kappa(1.0, 5.0);
  std::uniform_int_distribution<int> side(2, 4);
  for (int trial = 0; trial < 50; ++trial) {
    const double kappa = std::pow(10.0, log_kappa(rng));
    const Instance c = cube(side(rng), kappa, 100.0, 0.3, 1000 + trial);
    const Mode mode = trial % 2 ? Mode::FullPose : Mode::RotationOnly;
    const BoundReport b = instance_bounds(c.inst.graph, c.truth, mode);
    const SpectralResult init = spectral_initialize(c.inst.graph, mode);
    const RotationSet& truth = c.inst.truth.rotations;
    EXPECT_LE(o_orbit_distance(truth.data, init.relaxation.y_star).distance, b.lemma1_bound)
        << "kappa " << kappa;
    EXPECT_LE(so_orbit_distance(truth, init.rotations).distance, b.thm3_bound) << "kappa " << kappa;
    ASSERT_TRUE(b.rotation_only_bound.has_value());
    if (mode == Mode::RotationOnly)
      EXPECT_LE(so_orbit_distance(truth, init.rotations).distance, *b.rotation_only_bound);
  }
}

// Refined low-noise solutions stand in for the global minimizer.
TEST(BoundValidity, RefinedSolutionProxy) {
  int checked = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const Instance c = cube(3, 1e4, 100, 0.3, 2000 + trial);
    const BoundReport b = instance_bounds(c.inst.graph, c.truth, Mode::FullPose);
    RefineOptions opts;
    opts.max_iter = 2000;
    const RefineResult r = refine(c.inst.graph, spectral_initialize(c.inst.graph, Mode::FullPose).rotations, opts);
    // Stationary to working precision: the Euclidean gradient here is of order kappa.
    if (!r.converged && !(r.stalled && r.gradient_norm <= 1e-3)) continue;
    ++checked;
    const RotationSet& truth = c.inst.truth.rotations;
    EXPECT_LE(so_orbit_distance(truth, r.rotations).distance, b.thm4_bound);
  }
  EXPECT_GE(checked, 5);
}

// --- Monte Carlo -------------------------------------------------------------------

// ||Delta Q||_2 itself grows like sqrt(kappa) (kappa times an angle of order
// kappa^-1/2); what vanishes is its size relative to the gap, and so every bound.
TEST(MonteCarlo, VanishingNoise) {
  Rng rng(21);
  PoseGraph g = testutil::random_graph(3, 15, 10, false, 0.0, rng);
  for (auto& e : g.edges) e.kappa = 1e9;
  const MonteCarloResult mc = monte_carlo_delta_q(g, 20, 5, Mode::RotationOnly);
  ASSERT_EQ(mc.samples.size(), 20u);
  EXPECT_TRUE(mc.identity_truth);
  for (double s : mc.samples) EXPECT_LE(s / mc.lambda_gap, 1e-3);
  EXPECT_LE(mc.bounds_at(1.0).thm3_bound, 1e-2);

  for (auto& e : g.edges) e.kappa = 1e7;
  const MonteCarloResult lower = monte_carlo_delta_q(g, 20, 5, Mode::RotationOnly);
  EXPECT_NEAR(mc.quantile(0.5) / lower.quantile(0.5), 10.0, 2.0);
}

TEST(MonteCarlo, DeterministicAndSorted) {
  Rng rng(22);
  const PoseGraph g = testutil::random_graph(3, 12, 8, false, 0.0, rng);
  const MonteCarloResult a = monte_carlo_delta_q(g, 16, 99, Mode::RotationOnly);
  const MonteCarloResult b = monte_carlo_delta_q(g, 16, 99, Mode::RotationOnly);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_TRUE(std::is_sorted(a.samples.begin(), a.samples.end()));
  EXPECT_NE(monte_carlo_delta_q(g, 16, 100, Mode::RotationOnly).samples, a.samples);
  EXPECT_NEAR(a.lambda_gap, spectral_gap(g), 1e-8);
}

TEST(MonteCarlo, QuantilesInterpolate) {
  MonteCarloResult mc;
  mc.d = 3;
  mc.n = 10;
  mc.lambda_gap = 2.0;
  mc.samples = {1.0, 2.0, 3.0, 4.0, 5.0};
  EXPECT_DOUBLE_EQ(mc.quantile(0.0), 1.0);
  EXPECT_DOUBLE_EQ(mc.quantile(1.0), 5.0);
  EXPECT_DOUBLE_EQ(mc.quantile(0.5), 3.0);
  EXPECT_DOUBLE_EQ(mc.quantile(0.625), 3.5);
  EXPECT_NEAR(mc.bounds_at(0.0).thm3_bound, 4 * std::sqrt(60.0) * 1.0 / 2.0, 1e-12);
}

TEST(MonteCarlo, FullPoseWithTruth) {
  CubeParams p;
  p.s = 3;
  p.seed = 4;
  const GroundTruthInstance inst = generate_cube(p);
  const MonteCarloResult mc = monte_carlo_delta_q(inst.graph, 8, 1, Mode::FullPose, inst.truth);
  EXPECT_FALSE(mc.identity_truth);
  EXPECT_EQ(mc.samples.size(), 8u);
  for (double s : mc.samples) EXPECT_GT(s, 0.0);
}

TEST(MonteCarlo, Errors) {
  Rng rng(23);
  const PoseGraph rot = testutil::random_graph(3, 6, 3, false, 0.0, rng);
  EXPECT_THROW(monte_carlo_delta_q(rot, 0, 1, Mode::RotationOnly), ArgumentError);
  EXPECT_THROW(monte_carlo_delta_q(rot, 4, 1, Mode::FullPose, PoseSet{RotationSet::identity(3, 6), Matrix::Zero(3, 6)}),
               ModeError);
  const PoseGraph full = testutil::random_graph(3, 6, 3, true, 0.0, rng);
  EXPECT_THROW(monte_carlo_delta_q(full, 4, 1, Mode::FullPose), ArgumentError);
}

// --- serialization --------------------------------------------------------------------

TEST(BoundReport, JsonEchoesInputs) {
  BoundReport r = evaluate_bounds(3, 10, 0.5, 2.0, true);
  add_rotation_only_bound(r, 0.25, 4.0);
  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_EQ(j.at("d"), 3);
  EXPECT_EQ(j.at("n"), 10);
  EXPECT_DOUBLE_EQ(j.at("delta_q_norm").get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j.at("lambda_gap").get<double>(), 2.0);
  EXPECT_TRUE(j.at("surrogate_used").get<bool>());
  EXPECT_DOUBLE_EQ(j.at("thm3_bound").get<double>(), r.thm3_bound);
  EXPECT_DOUBLE_EQ(j.at("rotation_only_bound").get<double>(), rotation_only_bound(3, 10, 0.25, 4.0));

  const auto plain = nlohmann::json::parse(evaluate_bounds(2, 4, 0.1, 1.0).to_json());
  EXPECT_TRUE(plain.at("rotation_only_bound").is_null());
}
