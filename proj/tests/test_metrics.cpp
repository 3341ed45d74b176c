#include <gtest/gtest.h>

#include "specinit/errors.hpp"
#include "specinit/metrics.hpp"
#include "specinit/spectral.hpp"
#include "specinit/synthgen.hpp"
#include "test_util.hpp"

using namespace specinit;
using testutil::Rng;

namespace {

Matrix left_multiply(const Matrix& g, const Matrix& x) { return g * x; }

// Random point of O(d)^n scaled like a relaxation solution: rows orthogonal
// with norm sqrt(n).
Matrix random_stiefel_rows(int d, int n, Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr(testutil::gaussian(d * n, d, rng));
  return std::sqrt(static_cast<double>(n)) * Matrix(qr.householderQ() * Matrix::Identity(d * n, d)).transpose();
}

}  // namespace

// --- orbit distances -------------------------------------------------------------

TEST(OrbitDistance, Examples) {
  Rng rng(1);
  const RotationSet x = testutil::random_rotations(3, 6, rng);
  EXPECT_NEAR(so_orbit_distance(x, x).distance, 0.0, 1e-12);
  EXPECT_NEAR(o_orbit_distance(x, x).distance, 0.0, 1e-12);

  // A single node is pure gauge.
  for (int k = 0; k < 10; ++k) {
    const RotationSet a = testutil::random_rotations(3, 1, rng), b = testutil::random_rotations(3, 1, rng);
    EXPECT_NEAR(so_orbit_distance(a, b).distance, 0.0, 1e-12);
  }

  Matrix p(2, 4), q(2, 4);
  p << Matrix::Identity(2, 2), Matrix::Identity(2, 2);
  q << Matrix::Identity(2, 2), testutil::planar(M_PI);
  const double oracle = testutil::grid_orbit_distance_2d(p, q, 3600);
  EXPECT_NEAR(oracle, 2.0 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(so_orbit_distance(p, q).distance, oracle, 1e-12);
}

TEST(OrbitDistance, GaugeRealizesDistance) {
  Rng rng(2);
  for (int k = 0; k < 100; ++k) {
    const int d = 2 + k % 2;
    const Matrix x = testutil::random_rotations(d, 5, rng).data;
    const Matrix y = testutil::random_rotations(d, 5, rng).data;
    const AlignmentResult s = so_orbit_distance(x, y);
    EXPECT_NEAR((x - s.gauge * y).norm(), s.distance, 1e-10);
    EXPECT_NEAR(s.gauge.determinant(), 1.0, 1e-10);
    const AlignmentResult o = o_orbit_distance(x, y);
    EXPECT_NEAR((x - o.gauge * y).norm(), o.distance, 1e-10);
    EXPECT_LE((o.gauge * o.gauge.transpose() - Matrix::Identity(d, d)).norm(), 1e-10);
  }
}

TEST(OrbitDistance, OrthogonalNeverExceedsSpecial) {
  Rng rng(3);
  for (int k = 0; k < 1000; ++k) {
    const int d = 2 + k % 2;
    const Matrix x = testutil::random_rotations(d, 4, rng).data;
    const Matrix y = k % 2 ? testutil::random_rotations(d, 4, rng).data : random_stiefel_rows(d, 4, rng);
    ASSERT_LE(o_orbit_distance(x, y).distance, so_orbit_distance(x, y).distance + 1e-12);
  }
}

TEST(OrbitDistance, PseudometricAxioms) {
  Rng rng(4);
  for (int k = 0; k < 1000; ++k) {
    const Matrix x = testutil::random_rotations(3, 5, rng).data;
    const Matrix y = testutil::random_rotations(3, 5, rng).data;
    const Matrix z = testutil::random_rotations(3, 5, rng).data;
    using Dist = AlignmentResult (*)(const Matrix&, const Matrix&);
    for (Dist dist : {Dist(so_orbit_distance), Dist(o_orbit_distance)}) {
      auto f = [&](const Matrix& a, const Matrix& b) { return dist(a, b).distance; };
      ASSERT_NEAR(f(x, x), 0.0, 1e-10);
      ASSERT_NEAR(f(x, y), f(y, x), 1e-10);
      ASSERT_LE(f(x, z), f(x, y) + f(y, z) + 1e-10);
    }
  }
}

TEST(OrbitDistance, GaugeInvariance) {
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    const int d = 2 + k % 2;
    const Matrix x = testutil::random_rotations(d, 7, rng).data;
    const Matrix y = testutil::random_rotations(d, 7, rng).data;
    const Matrix g = testutil::random_rotation(d, rng);
    ASSERT_NEAR(so_orbit_distance(left_multiply(g, x), y).distance, so_orbit_distance(x, y).distance, 1e-10);
    ASSERT_NEAR(so_orbit_distance(x, left_multiply(g, y)).distance, so_orbit_distance(x, y).distance, 1e-10);
  }
}

TEST(OrbitDistance, AgreesWithFineAngleGrid) {
  Rng rng(6);
  for (int k = 0; k < 3; ++k) {
    const Matrix x = testutil::random_rotations(2, 5, rng).data;
    const Matrix y = testutil::random_rotations(2, 5, rng).data;
    EXPECT_NEAR(so_orbit_distance(x, y).distance, testutil::grid_orbit_distance_2d(x, y, 1000000), 1e-5);
  }
}

TEST(OrbitDistance, DimensionMismatch) {
  EXPECT_THROW(so_orbit_distance(Matrix::Identity(3, 6), Matrix::Identity(3, 3)), DimensionError);
  EXPECT_THROW(o_orbit_distance(Matrix::Identity(2, 4), Matrix::Identity(3, 6)), DimensionError);
}

// --- costs ----------------------------------------------------------------------------

TEST(EvaluateCost, Examples) {
  Rng rng(11);
  const RotationSet truth = testutil::random_rotations(3, 10, rng);
  const Matrix t = testutil::gaussian(3, 10, rng);
  const PoseGraph g = testutil::make_graph(3, 10, testutil::random_edges(10, 8, rng), truth, t, true, 0.0, rng);
  EXPECT_NEAR(evaluate_cost(g, truth, CostKind::RotationAveraging), 0.0, 1e-20);
  EXPECT_NEAR(evaluate_cost(g, PoseSet{truth, t}, CostKind::PoseGraph), 0.0, 1e-20);
  EXPECT_NEAR(evaluate_cost(g, truth, CostKind::Quadratic), 0.0, 1e-9);

  PoseGraph one;
  one.d = 2;
  one.n = 2;
  one.mode = Mode::RotationOnly;
  one.edges.push_back({0, 1, testutil::planar(M_PI), Vector(), 1.0, 0.0});
  // ||I - R(pi)||_F^2 = ||2 I||_F^2.
  EXPECT_NEAR(evaluate_cost(one, RotationSet::identity(2, 2), CostKind::RotationAveraging), 8.0, 1e-12);
}

TEST(EvaluateCost, RotationAveragingEqualsQuadraticUpToConstant) {
  Rng rng(12);
  const PoseGraph g = testutil::random_graph(3, 12, 10, false, 0.5, rng);
  double offset = NAN;
  for (int k = 0; k < 10; ++k) {
    const RotationSet r = testutil::random_rotations(3, 12, rng);
    const double diff = evaluate_cost(g, r, CostKind::RotationAveraging) - evaluate_cost(g, r, CostKind::Quadratic);
    if (k == 0) offset = diff;
    EXPECT_NEAR(diff, offset, 1e-9);
  }
}

TEST(EvaluateCost, PoseGraphAtOptimalTranslationsEqualsQuadratic) {
  Rng rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    const PoseGraph g = testutil::random_graph(2 + trial % 2, 15, 12, true, 0.4, rng);
    const RotationSet r = testutil::random_rotations(g.d, g.n, rng);
    const double pgo = evaluate_cost(g, recover_translations(g, r), CostKind::PoseGraph);
    EXPECT_NEAR(pgo, evaluate_cost(g, r, CostKind::Quadratic), 1e-8 * pgo);
  }
}

TEST(EvaluateCost, Errors) {
  Rng rng(14);
  const PoseGraph g = testutil::random_graph(3, 5, 2, true, 0.1, rng);
  EXPECT_THROW(evaluate_cost(g, RotationSet::identity(3, 5), CostKind::PoseGraph), ModeError);
  EXPECT_THROW(evaluate_cost(g, RotationSet::identity(3, 4), CostKind::RotationAveraging), DimensionError);
}

// --- orthogonal decomposition -------------------------------------------------------

TEST(OrthogonalDecomposition, Properties) {
  Rng rng(21);
  for (int k = 0; k < 200; ++k) {
    const int d = 2 + k % 2;
    const Matrix truth = testutil::random_rotations(d, 8, rng).data;
    const Matrix est = testutil::random_rotations(d, 8, rng).data;
    const OrthogonalDecomposition od = orthogonal_decomposition(est, truth);
    EXPECT_LE((od.k + od.p - est).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_NEAR(od.k.cwiseProduct(od.p).sum(), 0.0, 1e-10);
    const double ds = so_orbit_distance(truth, est).distance;
    EXPECT_LE(0.25 * ds * ds, od.p.squaredNorm() + 1e-10);
  }
}

TEST(OrthogonalDecomposition, ResidualIsLinear) {
  Rng rng(22);
  const Matrix truth = testutil::random_rotations(3, 6, rng).data;
  EXPECT_LE(orthogonal_decomposition(truth, truth).p.norm(), 1e-12);
  const Matrix est = testutil::random_rotations(3, 6, rng).data;
  const OrthogonalDecomposition od = orthogonal_decomposition(est, truth);
  const OrthogonalDecomposition twice = orthogonal_decomposition(od.k + 2.0 * od.p, truth);
  EXPECT_NEAR(twice.p.norm(), 2.0 * od.p.norm(), 1e-10);
}

// --- refinement ---------------------------------------------------------------------

TEST(RiemannianGradient, MatchesFiniteDifferences) {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 2 + trial % 2;
    const PoseGraph g = testutil::random_graph(d, 10, 10, trial % 2 == 0, 0.5, rng);
    const DataMatrixSet m = assemble(g, g.mode);
    const RotationSet r = testutil::random_rotations(d, g.n, rng);
    const Matrix grad = riemannian_gradient(m.q, r.data);
    // Random tangent direction R_i S_i, central differences along the
    // projection retraction.
    Matrix dir(d, d * g.n);
    for (int i = 0; i < g.n; ++i) {
      Matrix s = testutil::gaussian(d, d, rng);
      s = 0.5 * (s - s.transpose()).eval();
      dir.middleCols(i * d, d) = r.block(i) * s;
    }
    const double h = 1e-5;
    const double fp = quadratic_form(m.q, round_to_rotations(r.data + h * dir).data);
    const double fm = quadratic_form(m.q, round_to_rotations(r.data - h * dir).data);
    const double fd = (fp - fm) / (2 * h);
    const double analytic = grad.cwiseProduct(dir).sum();
    EXPECT_NEAR(fd, analytic, 1e-5 * std::max(1.0, std::abs(analytic))) << "trial " << trial;
  }
}

TEST(Refine, StationaryAtNoiselessTruth) {
  Rng rng(32);
  const RotationSet truth = testutil::random_rotations(3, 15, rng);
  const PoseGraph g = testutil::make_graph(3, 15, testutil::random_edges(15, 10, rng), truth,
                                           testutil::gaussian(3, 15, rng), true, 0.0, rng);
  const RefineResult res = refine(g, truth);
  EXPECT_EQ(res.iterations, 0);
  EXPECT_TRUE(res.converged);
  EXPECT_NEAR(res.final_cost, 0.0, 1e-9);
}

TEST(Refine, DescendsFromSpectralInitialization) {
  CubeParams p;
  p.s = 3;
  p.kappa = 1e3;
  p.tau = 100;
  p.p_lc = 0.3;
  p.seed = 7;
  const GroundTruthInstance inst = generate_cube(p);
  const SpectralResult init = spectral_initialize(inst.graph, Mode::FullPose);
  const RefineResult res = refine(inst.graph, init.rotations);
  EXPECT_LE(res.final_cost, res.initial_cost);
  EXPECT_TRUE(res.rotations.is_valid(1e-10));
  if (res.iterations > 0) EXPECT_LT(res.final_cost, res.initial_cost);
  EXPECT_NEAR(res.final_cost, evaluate_cost(inst.graph, res.rotations, CostKind::Quadratic),
              1e-8 * std::max(1.0, res.final_cost));
}

TEST(Refine, CostNeverIncreases) {
  Rng rng(33);
  const PoseGraph g = testutil::random_graph(3, 20, 30, true, 0.3, rng);
  const DataMatrixSet m = assemble(g, g.mode);
  RotationSet r = testutil::random_rotations(3, 20, rng);
  RefineOptions one_step;
  one_step.max_iter = 1;
  double last = quadratic_form(m.q, r.data);
  for (int k = 0; k < 50; ++k) {
    const RefineResult res = refine(m.q, r, one_step);
    ASSERT_LE(res.final_cost, last + 1e-12 * std::abs(last));
    last = res.final_cost;
    r = res.rotations;
  }
}

TEST(Refine, SpectralNeedsNoMoreIterationsThanOdometry) {
  int wins = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    CubeParams p;
    p.s = 3;
    p.kappa = 1e3;
    p.tau = 100;
    p.p_lc = 0.3;
    p.seed = 100 + trial;
    const GroundTruthInstance inst = generate_cube(p);
    const int spectral = refine(inst.graph, spectral_initialize(inst.graph, Mode::FullPose).rotations).iterations;
    const int odometry = refine(inst.graph, odometry_initialize(inst.graph).rotations).iterations;
    if (spectral <= odometry) ++wins;
  }
  EXPECT_GE(wins, 18);
}
