#pragma once

#include <cstdint>

#include "specinit/datamatrix.hpp"
#include "specinit/linalg.hpp"
#include "specinit/posegraph.hpp"

namespace specinit {

/// Nearest rotation U Xi V^T, Xi = Diag(1, ..., 1, det(U V^T)). For degenerate
/// inputs (rank deficient, or a tie in the smallest singular value with a
/// reflection) one of the minimizers is returned.
Matrix project_to_SOd(const Matrix& x);

/// Blockwise projection of a d x (d n) matrix onto SO(d)^n.
RotationSet round_to_rotations(const Matrix& y);

struct RelaxationSolution {
  Matrix y_star;          // d x (d n), rows are sqrt(n)-scaled eigenvectors
  Vector eigenvalues;     // d smallest eigenvalues of Q
  double p_star = 0.0;    // n * sum(eigenvalues)
  Vector residuals;       // eigenpair residual norms
  /// lambda_{d+1}(Q) - lambda_d(Q) when it could be computed, else NaN.
  double eigengap = 0.0;
  int matvecs = 0;
};

struct SpectralOptions {
  double tol = 1e-8;
  std::uint64_t seed = 0x5eed;
  int max_iter = 20000;
  int krylov_dim = 200;
  bool compute_eigengap = true;
  /// Solve through (Q + shift I)^{-1} when Q is available as a data matrix
  /// set; shift = shift_scale * (Gershgorin bound of L(G^rho)).
  bool shift_invert = true;
  double shift_scale = 1e-6;

  LanczosOptions lanczos() const { return {tol, max_iter, krylov_dim, seed}; }
};

/// Minimizer of tr(Q Y^T Y) subject to Y Y^T = n I_d.
RelaxationSolution solve_relaxation(const DataMatrixSet& m, const SpectralOptions& opts = {});
RelaxationSolution solve_relaxation(const LinearOperator& q, int d,
                                    const SpectralOptions& opts = {});

/// Negates the last row of Y when more than half of its d x d blocks have
/// negative determinant. Y stays a minimizer of the relaxation.
void orient_relaxation(Matrix& y);

struct SpectralResult {
  RotationSet rotations;
  RelaxationSolution relaxation;
};

/// Spectral initialization: d bottom eigenvectors of Q, oriented and rounded
/// blockwise.
SpectralResult spectral_initialize(const PoseGraph& graph, Mode mode,
                                   const SpectralOptions& opts = {});

/// Linear least-squares relaxation with R_1 = I_d, solved on the anchored
/// connection Laplacian and rounded blockwise.
RotationSet chordal_initialize(const PoseGraph& graph);

/// Translations minimizing sum tau_ij ||t_j - t_i - R_i t_ij||^2 with t_1 = 0.
PoseSet recover_translations(const PoseGraph& graph, const RotationSet& rotations);

/// Composes measurements along consecutive node indices (0 -> 1 -> ...).
/// Falls back to a breadth-first spanning tree from node 0 when an
/// odometry edge is missing.
PoseSet odometry_initialize(const PoseGraph& graph);

}  // namespace specinit
