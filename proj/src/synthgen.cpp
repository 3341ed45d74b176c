#include "specinit/synthgen.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>

#include "specinit/bounds.hpp"
#include "specinit/datamatrix.hpp"
#include "specinit/errors.hpp"
#include "specinit/metrics.hpp"
#include "specinit/spectral.hpp"

namespace specinit {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr double kPi = std::numbers::pi;

// Log of the (unnormalized) angle density, shifted so that theta = 0 carries
// exp(2 kappa cos theta) -> 1. Uses 1 - cos(theta) = 2 sin^2(theta / 2).
double log_angle_density(int d, double kappa, double theta) {
  const double s = std::sin(0.5 * theta);
  const double tail = -4.0 * kappa * s * s;
  if (d == 2) return tail;
  return std::log(2.0 * s * s) + tail;
}

double density_mode(int d, double kappa) {
  if (d == 2) return 0.0;
  if (kappa < 0.25) return kPi;
  return std::acos(1.0 - 1.0 / (2.0 * kappa));
}

// Largest angle whose log-density is within `drop` of the peak.
double support_limit(int d, double kappa, double peak_theta, double peak, double drop) {
  if (log_angle_density(d, kappa, kPi) >= peak - drop) return kPi;
  double lo = peak_theta, hi = kPi;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (log_angle_density(d, kappa, mid) >= peak - drop ? lo : hi) = mid;
  }
  return hi;
}

Matrix planar_rotation(double theta) {
  Matrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

Matrix sample_langevin(int d, double kappa, Rng& rng, LangevinStats* stats) {
  if (d != 2 && d != 3) throw DimensionError("Langevin sampling supports d = 2 or 3");
  if (!(kappa >= 0.0)) throw ArgumentError("kappa must be non-negative");

  const double peak_theta = density_mode(d, kappa);
  const double peak = log_angle_density(d, kappa, peak_theta);
  const double theta_max = support_limit(d, kappa, peak_theta, peak, 40.0);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double theta = 0.0;
  for (;;) {
    theta = theta_max * unif(rng);
    const double u = unif(rng);
    if (stats) ++stats->proposed;
    if (std::log(u) <= log_angle_density(d, kappa, theta) - peak) break;
  }
  if (stats) ++stats->accepted;

  if (d == 2) return planar_rotation(unif(rng) < 0.5 ? theta : -theta);

  std::normal_distribution<double> normal;
  Eigen::Vector3d axis;
  do {
    axis = Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
  } while (axis.norm() < 1e-12);
  return Matrix(Eigen::AngleAxisd(theta, axis.normalized()).toRotationMatrix());
}

Matrix sample_haar(int d, Rng& rng) {
  if (d == 2) {
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    return planar_rotation(angle(rng));
  }
  if (d != 3) throw DimensionError("Haar sampling supports d = 2 or 3");
  std::normal_distribution<double> normal;
  Eigen::Vector4d q;
  do {
    q = Eigen::Vector4d(normal(rng), normal(rng), normal(rng), normal(rng));
  } while (q.norm() < 1e-12);
  q.normalize();
  return Matrix(Eigen::Quaterniond(q[0], q[1], q[2], q[3]).toRotationMatrix());
}

double rotation_angle(const Matrix& r) {
  if (r.rows() == 2) return std::abs(std::atan2(r(1, 0), r(0, 0)));
  const Eigen::Vector3d axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return std::atan2(0.5 * axis.norm(), 0.5 * (r.trace() - 1.0));
}

// ---------------------------------------------------------------------------

void CubeParams::validate() const {
  if (s < 2) throw ArgumentError("cube side s must be at least 2");
  if (!(kappa > 0.0)) throw ArgumentError("kappa must be positive");
  if (!(tau > 0.0)) throw ArgumentError("tau must be positive");
  if (!(p_lc >= 0.0 && p_lc <= 1.0)) throw ArgumentError("loop-closure probability must lie in [0, 1]");
}

Eigen::Vector3i cube_coordinates(int s, int k) {
  const int z = k / (s * s);
  const int row = k / s;  // global row counter, alternates x direction
  const int yy = row % s;
  const int xx = k % s;
  const int y = (z % 2 == 0) ? yy : s - 1 - yy;
  const int x = (row % 2 == 0) ? xx : s - 1 - xx;
  return {x, y, z};
}

PoseGraph measurements_from_truth(const PoseGraph& topology, const PoseSet& truth) {
  PoseGraph g = topology;
  g.vertices.reset();
  for (auto& e : g.edges) {
    const auto ri = truth.rotations.block(e.i);
    e.rotation = ri.transpose() * truth.rotations.block(e.j);
    if (g.has_translations())
      e.translation = ri.transpose() * (truth.translations.col(e.j) - truth.translations.col(e.i));
  }
  return g;
}

PoseGraph noiseless_graph(const GroundTruthInstance& instance) {
  return measurements_from_truth(instance.graph, instance.truth);
}

PoseGraph sample_measurements(const PoseGraph& topology, const PoseSet& truth, Rng& rng,
                              LangevinStats* stats) {
  if (truth.d() != topology.d || truth.n() != topology.n)
    throw DimensionError("ground truth does not match the graph");
  PoseGraph g = measurements_from_truth(topology, truth);
  std::normal_distribution<double> normal;
  for (auto& e : g.edges) {
    e.rotation = e.rotation * sample_langevin(g.d, e.kappa, rng, stats);
    if (g.has_translations()) {
      if (!(e.tau > 0.0)) throw ArgumentError("translation sampling needs tau > 0");
      const double sigma = 1.0 / std::sqrt(e.tau);
      for (int c = 0; c < g.d; ++c) e.translation[c] += sigma * normal(rng);
    }
  }
  return g;
}

GroundTruthInstance generate_cube(const CubeParams& params) {
  params.validate();
  const int s = params.s;
  const int n = s * s * s;

  Rng truth_rng(derive_seed(params.seed, 0));
  Rng topology_rng(derive_seed(params.seed, 1));
  Rng noise_rng(derive_seed(params.seed, 2));

  GroundTruthInstance inst;
  inst.params = params;
  inst.truth.rotations = RotationSet::identity(3, n);
  inst.truth.translations.resize(3, n);
  std::vector<int> index_of(n);
  for (int k = 0; k < n; ++k) {
    const Eigen::Vector3i c = cube_coordinates(s, k);
    inst.truth.rotations.block(k) = sample_haar(3, truth_rng);
    inst.truth.translations.col(k) = c.cast<double>();
    index_of[c[0] + s * (c[1] + s * c[2])] = k;
  }

  PoseGraph& g = inst.graph;
  g.d = 3;
  g.n = n;
  g.mode = Mode::FullPose;
  auto add_edge = [&](int i, int j) {
    RelativeMeasurement e;
    e.i = i;
    e.j = j;
    e.kappa = params.kappa;
    e.tau = params.tau;
    g.edges.push_back(std::move(e));
  };
  for (int k = 0; k + 1 < n; ++k) add_edge(k, k + 1);

  std::vector<std::pair<int, int>> candidates;
  for (int k = 0; k < n; ++k) {
    const Eigen::Vector3i c = cube_coordinates(s, k);
    for (int axis = 0; axis < 3; ++axis) {
      Eigen::Vector3i nb = c;
      if (++nb[axis] >= s) continue;
      const int j = index_of[nb[0] + s * (nb[1] + s * nb[2])];
      if (std::abs(j - k) != 1) candidates.emplace_back(std::min(j, k), std::max(j, k));
    }
  }
  std::sort(candidates.begin(), candidates.end());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const auto& [i, j] : candidates)
    if (unif(topology_rng) < params.p_lc) add_edge(i, j);

  g = params.noiseless ? measurements_from_truth(g, inst.truth)
                       : sample_measurements(g, inst.truth, noise_rng, &inst.sampler);
  return inst;
}

// ---------------------------------------------------------------------------

namespace {

struct Cell {
  double kappa, tau, p_lc;
  int s;
};

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

std::vector<SweepRow> run_instance(const Cell& cell, int trial, std::uint64_t seed, double tol) {
  static const char* kMethods[] = {"spectral", "spectral-rot", "chordal"};
  std::vector<SweepRow> rows(3);
  for (int m = 0; m < 3; ++m) {
    rows[m].kappa = cell.kappa;
    rows[m].tau = cell.tau;
    rows[m].p_lc = cell.p_lc;
    rows[m].s = cell.s;
    rows[m].trial = trial;
    rows[m].seed = seed;
    rows[m].method = kMethods[m];
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();

  GroundTruthInstance inst;
  PoseGraph truth_graph;
  DataMatrixSet full;
  try {
    CubeParams p;
    p.s = cell.s;
    p.p_lc = cell.p_lc;
    p.kappa = cell.kappa;
    p.tau = cell.tau;
    p.seed = seed;
    inst = generate_cube(p);
    truth_graph = noiseless_graph(inst);
    full = assemble(inst.graph, Mode::FullPose);
  } catch (const std::exception& ex) {
    for (auto& r : rows) {
      r.d_s_true = r.cost = r.lemma1_bound = r.thm3_bound = r.rot_only_bound = r.wall_ms = nan;
      r.error = ex.what();
    }
    return rows;
  }

  LanczosOptions lz;
  lz.tol = tol;
  lz.seed = seed;
  double lemma1 = nan, thm3 = nan, rot_only = nan;
  std::string bound_error;
  try {
    const BoundReport b = instance_bounds(inst.graph, truth_graph, Mode::FullPose, lz);
    lemma1 = b.lemma1_bound;
    thm3 = b.thm3_bound;
    rot_only = b.rotation_only_bound.value_or(nan);
  } catch (const std::exception& ex) {
    bound_error = std::string("bounds: ") + ex.what();
  }

  SpectralOptions so;
  so.tol = tol;
  so.seed = seed;
  so.compute_eigengap = false;
  for (int m = 0; m < 3; ++m) {
    SweepRow& r = rows[m];
    r.lemma1_bound = lemma1;
    r.thm3_bound = thm3;
    r.rot_only_bound = rot_only;
    r.error = bound_error;
    try {
      const auto start = std::chrono::steady_clock::now();
      RotationSet est;
      if (m == 0) est = spectral_initialize(inst.graph, Mode::FullPose, so).rotations;
      if (m == 1) est = spectral_initialize(inst.graph, Mode::RotationOnly, so).rotations;
      if (m == 2) est = chordal_initialize(inst.graph);
      r.wall_ms = elapsed_ms(start);
      r.d_s_true = so_orbit_distance(inst.truth.rotations, est).distance;
      r.cost = quadratic_form(full.q, est.data);
    } catch (const std::exception& ex) {
      r.d_s_true = r.cost = r.wall_ms = nan;
      r.error = ex.what();
    }
  }
  return rows;
}

}  // namespace

std::vector<SweepRow> sweep(const SweepGrid& grid) {
  if (grid.cells() == 0) throw ArgumentError("sweep grid is empty");
  if (grid.trials < 1) throw ArgumentError("trials must be at least 1");

  std::vector<Cell> cells;
  for (double kappa : grid.kappa)
    for (double tau : grid.tau)
      for (double p_lc : grid.p_lc)
        for (int s : grid.s) cells.push_back({kappa, tau, p_lc, s});

  const int jobs_total = static_cast<int>(cells.size()) * grid.trials;
  std::vector<std::vector<SweepRow>> results(jobs_total);
#pragma omp parallel for schedule(dynamic) num_threads(std::max(grid.jobs, 1))
  for (int job = 0; job < jobs_total; ++job) {
    const int c = job / grid.trials;
    const int trial = job % grid.trials;
    results[job] = run_instance(cells[c], trial, derive_seed(grid.seed, job), grid.tol);
  }

  std::vector<SweepRow> rows;
  rows.reserve(static_cast<size_t>(jobs_total) * 3);
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  return rows;
}

}  // namespace specinit
