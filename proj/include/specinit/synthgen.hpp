#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "specinit/posegraph.hpp"

namespace specinit {

using Rng = std::mt19937_64;

/// Seed for the `index`-th independent stream under `seed` (splitmix64 mix).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

struct LangevinStats {
  long long proposed = 0;
  long long accepted = 0;

  double acceptance_rate() const {
    return proposed == 0 ? 1.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  }
};

/// Draws from the isotropic Langevin density exp(kappa tr(R)) on SO(d),
/// d in {2, 3}. The rotation angle is drawn by rejection from a uniform
/// proposal on [0, theta_max], where theta_max is the point beyond which the
/// log-density sits more than 40 below its maximum; for kappa near zero this
/// is the whole interval [0, pi].
Matrix sample_langevin(int d, double kappa, Rng& rng, LangevinStats* stats = nullptr);

/// Haar-uniform rotation.
Matrix sample_haar(int d, Rng& rng);

/// Rotation angle of a d x d rotation in [0, pi].
double rotation_angle(const Matrix& r);

struct CubeParams {
  int s = 10;
  double p_lc = 0.1;
  double kappa = 1e4;
  double tau = 100.0;
  std::uint64_t seed = 0;
  bool noiseless = false;

  /// Throws ArgumentError for s < 2, kappa <= 0, tau <= 0 or p_lc outside [0, 1].
  void validate() const;
};

struct GroundTruthInstance {
  PoseGraph graph;
  PoseSet truth;
  CubeParams params;
  LangevinStats sampler;
};

/// s x s x s grid of poses visited by a boustrophedon path (x fastest, then
/// y, then z); path edges are odometry, every other grid-adjacent pair becomes
/// a loop closure with probability p_lc. Truth rotations are Haar-uniform,
/// positions are the unit grid. Topology, truth and noise are drawn from
/// separate streams, so instances differing only in kappa, tau or the
/// noiseless flag share topology and truth.
GroundTruthInstance generate_cube(const CubeParams& params);

/// Grid coordinates of the k-th vertex along the path.
Eigen::Vector3i cube_coordinates(int s, int k);

/// Same topology and precisions, measurements recomputed exactly from truth.
PoseGraph measurements_from_truth(const PoseGraph& topology, const PoseSet& truth);
PoseGraph noiseless_graph(const GroundTruthInstance& instance);

/// Fresh noisy measurements around `truth`:
///   R_ij = R_i^T R_j Langevin(I, kappa_ij),  t_ij = R_i^T (t_j - t_i) + N(0, I / tau_ij).
/// Translations are sampled only when the topology is full-pose.
PoseGraph sample_measurements(const PoseGraph& topology, const PoseSet& truth, Rng& rng,
                              LangevinStats* stats = nullptr);

// ---------------------------------------------------------------------------

struct SweepGrid {
  std::vector<double> kappa;
  std::vector<double> tau;
  std::vector<double> p_lc;
  std::vector<int> s;
  int trials = 1;
  std::uint64_t seed = 0;
  double tol = 1e-8;
  int jobs = 1;

  std::size_t cells() const { return kappa.size() * tau.size() * p_lc.size() * s.size(); }
};

struct SweepRow {
  double kappa = 0.0;
  double tau = 0.0;
  double p_lc = 0.0;
  int s = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string method;  // spectral | spectral-rot | chordal
  double d_s_true = 0.0;
  double cost = 0.0;
  double lemma1_bound = 0.0;
  double thm3_bound = 0.0;
  double rot_only_bound = 0.0;
  double wall_ms = 0.0;
  std::string error;  // empty on success
};

/// One row per (cell, trial, method), ordered by cell index (kappa slowest,
/// s fastest), then trial, then method. Each instance uses its own derived
/// seed, so the table does not depend on `jobs`. Costs use the full pose-graph
/// data matrix; bounds use the exact spectral gap of the noiseless matrix.
/// Failures inside a cell are recorded in `error`.
std::vector<SweepRow> sweep(const SweepGrid& grid);

}  // namespace specinit
