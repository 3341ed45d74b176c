#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "specinit/linalg.hpp"
#include "specinit/posegraph.hpp"

namespace specinit {

/// Worst-case error bounds evaluated at a perturbation size and spectral gap.
struct BoundReport {
  int d = 0;
  int n = 0;
  double delta_q_norm = 0.0;  // ||Q_noisy - Q_true||_2
  double lambda_gap = 0.0;    // lambda_{d+1}(Q_true), or its lambda_2(L(W^rho)) lower bound
  bool surrogate_used = false;

  double lemma1_bound = 0.0;  // d_O(R_true, Y*)      <= 2 sqrt(2dn) D / gap
  double thm3_bound = 0.0;    // d_S(R_true, R_init)  <= 4 sqrt(2dn) D / gap
  double thm4_bound = 0.0;    // d_S(R_true, R_opt)   <= 8 sqrt(dn) D / gap
  double cor5_bound = 0.0;    // d_S(R_init, R_opt)   <= (8 + 4 sqrt(2)) sqrt(dn) D / gap

  /// Rotation-only initialization: 4 sqrt(2dn) ||dL(G^rho)||_2 / lambda_2(L(W^rho)).
  std::optional<double> delta_rho_norm;
  std::optional<double> rho_gap;
  std::optional<double> rotation_only_bound;

  std::string to_json() const;
};

/// Throws NonPositiveGap when lambda_gap <= 0 and ArgumentError when
/// delta_q_norm < 0.
BoundReport evaluate_bounds(int d, int n, double delta_q_norm, double lambda_gap,
                            bool surrogate_used = false);

/// Adds the rotation-only bound to an existing report.
void add_rotation_only_bound(BoundReport& report, double delta_rho_norm, double rho_gap);

double rotation_only_bound(int d, int n, double delta_rho_norm, double rho_gap);
double rotation_only_bound(const PoseGraph& graph, double delta_rho_norm,
                           const LanczosOptions& opts = {});

/// lambda_2(L(W^rho)). Equals lambda_{d+1} of the noiseless rotation connection
/// Laplacian and lower-bounds lambda_{d+1} of the noiseless full data matrix.
double spectral_gap(const PoseGraph& graph, const LanczosOptions& opts = {});

/// lambda_{d+1} of the data matrix of `graph` in the given mode (meant for a
/// noiseless graph).
double exact_gap(const PoseGraph& graph, Mode mode, const LanczosOptions& opts = {});

/// Bounds for a noisy graph with known noiseless counterpart: exact gap,
/// perturbation norm in `mode`, plus the rotation-only bound.
BoundReport instance_bounds(const PoseGraph& noisy, const PoseGraph& truth, Mode mode,
                            const LanczosOptions& opts = {});

struct MonteCarloResult {
  int d = 0;
  int n = 0;
  Mode mode = Mode::RotationOnly;
  std::vector<double> samples;  // ||Delta Q||_2, ascending
  double lambda_gap = 0.0;      // exact gap of the simulated noiseless matrix
  bool identity_truth = true;   // simulated around R_i = I (an approximation)
  std::uint64_t seed = 0;

  /// Linear-interpolated empirical quantile, q in [0, 1].
  double quantile(double q) const;
  /// Bounds evaluated at the q-quantile of the perturbation norm.
  BoundReport bounds_at(double q) const;
  std::string to_json(const std::vector<double>& quantiles) const;
};

/// Empirical distribution of ||Delta Q||_2 from fresh measurements drawn
/// around a ground truth with the precisions of `topology`. Without `truth`
/// the rotations are all identity; full-pose simulation needs truth
/// translations. Trial t uses stream derive_seed(seed, t).
MonteCarloResult monte_carlo_delta_q(const PoseGraph& topology, int trials, std::uint64_t seed,
                                     Mode mode, const std::optional<PoseSet>& truth = std::nullopt,
                                     const LanczosOptions& opts = {});

}  // namespace specinit
