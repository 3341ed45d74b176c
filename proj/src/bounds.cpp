#include "specinit/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include <json.hpp>

#include "specinit/datamatrix.hpp"
#include "specinit/errors.hpp"
#include "specinit/synthgen.hpp"

namespace specinit {

using nlohmann::json;

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string BoundReport::to_json() const {
  json j = {
      {"d", d},
      {"n", n},
      {"delta_q_norm", delta_q_norm},
      {"lambda_gap", lambda_gap},
      {"surrogate_used", surrogate_used},
      {"lemma1_bound", lemma1_bound},
      {"thm3_bound", thm3_bound},
      {"thm4_bound", thm4_bound},
      {"cor5_bound", cor5_bound},
      {"delta_rho_norm", optional_json(delta_rho_norm)},
      {"rho_gap", optional_json(rho_gap)},
      {"rotation_only_bound", optional_json(rotation_only_bound)},
  };
  return j.dump(2);
}

BoundReport evaluate_bounds(int d, int n, double delta_q_norm, double lambda_gap, bool surrogate_used) {
  if (!(lambda_gap > 0.0)) throw NonPositiveGap(lambda_gap);
  if (!(delta_q_norm >= 0.0)) throw ArgumentError("perturbation norm must be non-negative");
  if (d <= 0 || n <= 0) throw DimensionError("d and n must be positive");

  BoundReport r;
  r.d = d;
  r.n = n;
  r.delta_q_norm = delta_q_norm;
  r.lambda_gap = lambda_gap;
  r.surrogate_used = surrogate_used;

  const double dn = static_cast<double>(d) * n;
  const double ratio = delta_q_norm / lambda_gap;
  r.lemma1_bound = 2.0 * std::sqrt(2.0 * dn) * ratio;
  r.thm3_bound = 4.0 * std::sqrt(2.0 * dn) * ratio;
  r.thm4_bound = 8.0 * std::sqrt(dn) * ratio;
  r.cor5_bound = (8.0 + 4.0 * std::sqrt(2.0)) * std::sqrt(dn) * ratio;
  return r;
}

double rotation_only_bound(int d, int n, double delta_rho_norm, double rho_gap) {
  if (!(rho_gap > 0.0)) throw NonPositiveGap(rho_gap);
  if (!(delta_rho_norm >= 0.0)) throw ArgumentError("perturbation norm must be non-negative");
  return 4.0 * std::sqrt(2.0 * d * n) * delta_rho_norm / rho_gap;
}

double rotation_only_bound(const PoseGraph& graph, double delta_rho_norm, const LanczosOptions& opts) {
  return rotation_only_bound(graph.d, graph.n, delta_rho_norm, spectral_gap(graph, opts));
}

void add_rotation_only_bound(BoundReport& report, double delta_rho_norm, double rho_gap) {
  report.rotation_only_bound = rotation_only_bound(report.d, report.n, delta_rho_norm, rho_gap);
  report.delta_rho_norm = delta_rho_norm;
  report.rho_gap = rho_gap;
}

// ---------------------------------------------------------------------------

double spectral_gap(const PoseGraph& graph, const LanczosOptions& opts) {
  if (graph.n < 2) throw ArgumentError("spectral gap needs at least two nodes");
  if (!check_connected(graph)) throw DisconnectedGraph();
  const SparseSymMatrix l = scalar_laplacian(graph, &RelativeMeasurement::kappa);
  const EigenPairs pairs = psd_lowest_eigenpairs(l, 2, opts);
  const double gap = pairs.values[1];
  if (!(gap > 1e-12 * l.gershgorin_bound())) throw DisconnectedGraph("rotational weight graph has no spectral gap");
  return gap;
}

double exact_gap(const PoseGraph& graph, Mode mode, const LanczosOptions& opts) {
  if (graph.n < 2) throw ArgumentError("spectral gap needs at least two nodes");
  const DataMatrixSet m = assemble(graph, mode);
  return data_matrix_eigenpairs(m, m.d + 1, opts).values[m.d];
}

BoundReport instance_bounds(const PoseGraph& noisy, const PoseGraph& truth, Mode mode,
                            const LanczosOptions& opts) {
  const double delta = perturbation_spectral_norm(noisy, truth, mode, opts);
  BoundReport r = evaluate_bounds(truth.d, truth.n, delta, exact_gap(truth, mode, opts));
  const double delta_rho = mode == Mode::RotationOnly
                               ? delta
                               : perturbation_spectral_norm(noisy, truth, Mode::RotationOnly, opts);
  add_rotation_only_bound(r, delta_rho, spectral_gap(truth, opts));
  return r;
}

// ---------------------------------------------------------------------------

double MonteCarloResult::quantile(double q) const {
  if (samples.empty()) throw ArgumentError("no samples");
  if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError("quantile must lie in [0, 1]");
  const double pos = q * static_cast<double>(samples.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, samples.size() - 1);
  return samples[lo] + (pos - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
}

BoundReport MonteCarloResult::bounds_at(double q) const {
  return evaluate_bounds(d, n, quantile(q), lambda_gap);
}

std::string MonteCarloResult::to_json(const std::vector<double>& quantiles) const {
  json qs = json::array();
  for (double q : quantiles) {
    const BoundReport b = bounds_at(q);
    qs.push_back({{"q", q},
                  {"delta_q_norm", b.delta_q_norm},
                  {"lemma1_bound", b.lemma1_bound},
                  {"thm3_bound", b.thm3_bound},
                  {"thm4_bound", b.thm4_bound},
                  {"cor5_bound", b.cor5_bound}});
  }
  json j = {{"d", d},
            {"n", n},
            {"mode", mode == Mode::FullPose ? "full" : "rot"},
            {"trials", samples.size()},
            {"seed", seed},
            {"lambda_gap", lambda_gap},
            {"identity_truth", identity_truth},
            {"note", identity_truth ? "simulated around identity rotations; approximation when the "
                                      "true rotations are unknown"
                                    : "simulated around the supplied ground truth"},
            {"samples", samples},
            {"quantiles", qs}};
  return j.dump(2);
}

MonteCarloResult monte_carlo_delta_q(const PoseGraph& topology, int trials, std::uint64_t seed,
                                     Mode mode, const std::optional<PoseSet>& truth,
                                     const LanczosOptions& opts) {
  if (trials < 1) throw ArgumentError("trials must be at least 1");
  if (mode == Mode::FullPose && !topology.has_translations())
    throw ModeError("full-pose simulation needs translation precisions");
  if (mode == Mode::FullPose && !truth)
    throw ArgumentError("full-pose simulation needs ground-truth translations");

  const PoseGraph topo = mode == Mode::RotationOnly ? rotation_only(topology) : topology;
  PoseSet x;
  if (truth) {
    if (truth->d() != topo.d || truth->n() != topo.n)
      throw DimensionError("ground truth does not match the graph");
    x = *truth;
  } else {
    x.rotations = RotationSet::identity(topo.d, topo.n);
    x.translations = Matrix::Zero(topo.d, topo.n);
  }

  const PoseGraph truth_graph = measurements_from_truth(topo, x);
  const DataMatrixSet q_true = assemble(truth_graph, mode);

  MonteCarloResult out;
  out.d = topo.d;
  out.n = topo.n;
  out.mode = mode;
  out.seed = seed;
  out.identity_truth = !truth.has_value();
  out.lambda_gap = exact_gap(truth_graph, mode, opts);
  out.samples.resize(trials);

  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < trials; ++t) {
    try {
      Rng rng(derive_seed(seed, t));
      const PoseGraph noisy = sample_measurements(topo, x, rng);
      const DataMatrixSet q_noisy = assemble(noisy, mode);
      out.samples[t] = spectral_norm(q_noisy.q - q_true.q, opts);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  std::sort(out.samples.begin(), out.samples.end());
  return out;
}

}  // namespace specinit
