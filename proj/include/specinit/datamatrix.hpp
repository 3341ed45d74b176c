#pragma once

#include <memory>
#include <optional>

#include "specinit/linalg.hpp"
#include "specinit/posegraph.hpp"

namespace specinit {

/// Rotation connection Laplacian L(G^rho): dn x dn with diagonal blocks
/// (sum of incident kappa) I_d and block (i, j) = -kappa_ij R_ij for each
/// measured edge (its transpose at (j, i)).
SparseSymMatrix rotation_connection_laplacian(const PoseGraph& graph);

/// Implicit translational data matrix
///   Q_tau = Omega - V^T L(W^tau)^+ V
/// applied as a block-diagonal product, two sparse products and one anchored
/// Laplacian solve per matvec. The Laplacian factorization is computed once
/// at construction.
class TranslationalOperator {
 public:
  explicit TranslationalOperator(const PoseGraph& graph);

  int dim() const { return d_ * n_; }
  void apply(const Vector& x, Vector& y) const;
  Vector operator*(const Vector& x) const;

  /// d x (d n) storage of the diagonal blocks of Omega.
  const Matrix& omega_blocks() const { return omega_; }
  /// n x (d n) cross-term matrix V.
  const Eigen::SparseMatrix<double, Eigen::RowMajor, int>& cross_terms() const { return v_; }
  const SparseSymMatrix& tau_laplacian() const { return l_tau_; }

  LinearOperator as_operator(std::shared_ptr<const TranslationalOperator> self) const;

 private:
  int d_ = 0;
  int n_ = 0;
  Matrix omega_;
  Eigen::SparseMatrix<double, Eigen::RowMajor, int> v_;
  Eigen::SparseMatrix<double, Eigen::RowMajor, int> vt_;
  SparseSymMatrix l_tau_;
  LaplacianPseudoInverse pinv_;
};

/// Builds the translational data operator; throws ModeError for rotation-only
/// graphs and DisconnectedGraph when the graph is not connected.
std::shared_ptr<const TranslationalOperator> translational_data_operator(const PoseGraph& graph);

struct DataMatrixSet {
  int d = 0;
  int n = 0;
  Mode mode = Mode::RotationOnly;
  std::shared_ptr<const SparseSymMatrix> rotation_laplacian;   // L(G^rho)
  std::shared_ptr<const TranslationalOperator> translational;  // Q_tau, full mode only
  LinearOperator q;                                            // Q

  int dim() const { return d * n; }
};

/// Q = L(G^rho) (rotation-only) or L(G^rho) + Q_tau (full pose).
DataMatrixSet assemble(const PoseGraph& graph, Mode mode);

/// Applies (Q + sigma I)^{-1}, sigma > 0, from one sparse LDL^T factorization.
/// In full-pose mode Q is the Schur complement of the anchored translation
/// block in
///   [ L_a(W^tau)   V_a                  ]
///   [ V_a^T        L(G^rho) + Omega + sigma I ]
/// so the inverse is the lower-right block of that (sparse) inverse and Q_tau
/// is never formed.
LinearOperator shifted_inverse(const DataMatrixSet& m, double sigma);

/// k smallest eigenpairs of Q: dense for tiny problems, otherwise
/// shift-invert Lanczos with sigma = shift_scale * (Gershgorin bound of
/// L(G^rho)).
EigenPairs data_matrix_eigenpairs(const DataMatrixSet& m, int k, const LanczosOptions& opts = {},
                                  double shift_scale = 1e-6);

/// tr(Q R^T R) for a d x (d n) matrix R.
double quadratic_form(const LinearOperator& q, const Matrix& r);

/// ||Q_noisy - Q_true||_2 for two graphs sharing topology and precisions.
double perturbation_spectral_norm(const PoseGraph& noisy, const PoseGraph& truth, Mode mode,
                                  const LanczosOptions& opts = {});

/// Throws TopologyMismatch unless the graphs have identical (d, n), edge
/// endpoints and precisions.
void require_same_topology(const PoseGraph& a, const PoseGraph& b);

}  // namespace specinit
