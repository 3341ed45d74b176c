#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "specinit/kernels.hpp"

namespace specinit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One stored coordinate of a symmetric matrix. Either triangle may be given;
/// (r, c) and (c, r) address the same pair of entries.
struct Coordinate {
  int row;
  int col;
  double value;
};

/// Symmetric sparse matrix assembled from one triangle.
///
/// Storage is compressed-row with both halves materialized so that a matvec is
/// a single row-parallel pass. Coordinates addressing the same (unordered)
/// position are summed during assembly, so the stored pattern has no
/// duplicates.
class SparseSymMatrix {
 public:
  using Storage = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

  SparseSymMatrix() = default;
  SparseSymMatrix(int dim, const std::vector<Coordinate>& triangle,
                  std::optional<int> block_size = std::nullopt);

  int dim() const { return static_cast<int>(storage_.rows()); }
  std::optional<int> block_size() const { return block_size_; }
  const Storage& storage() const { return storage_; }
  kernels::CsrView csr() const;

  /// y = A x using the OpenMP kernel.
  Vector operator*(const Vector& x) const;
  void apply(const Vector& x, Vector& y) const;

  /// Upper bound on |lambda| from Gershgorin discs.
  double gershgorin_bound() const;

  Matrix to_dense() const;

  /// Principal submatrix with row/column `index` removed.
  Storage anchored(int index) const;

 private:
  Storage storage_;
  std::optional<int> block_size_;
};

/// Matrix-free symmetric operator.
struct LinearOperator {
  int dim = 0;
  std::function<void(const Vector&, Vector&)> apply;
  /// Known upper bound on the spectral radius, if any.
  std::optional<double> norm_bound;

  Vector operator()(const Vector& x) const {
    Vector y(dim);
    apply(x, y);
    return y;
  }

  static LinearOperator from_sparse(std::shared_ptr<const SparseSymMatrix> a);
  static LinearOperator from_dense(Matrix a);
};

LinearOperator operator+(const LinearOperator& a, const LinearOperator& b);
LinearOperator operator-(const LinearOperator& a, const LinearOperator& b);

struct EigenPairs {
  Vector values;                // ascending
  Matrix vectors;               // dim x k, orthonormal columns
  Vector residual_norms;        // ||A v - lambda v||
  int matvecs = 0;
};

struct LanczosOptions {
  double tol = 1e-8;            // residual tolerance relative to ||A||
  int max_iter = 20000;         // total operator applications
  int krylov_dim = 200;         // basis size per restart cycle
  std::uint64_t seed = 0x5eed;
};

/// k algebraically smallest eigenpairs of a symmetric operator.
///
/// Restarted Lanczos with full reorthogonalization and locking. Converged
/// pairs are deflated and each restart injects a fresh seeded random
/// direction, so eigenvalues of multiplicity > 1 (e.g. the d-dimensional
/// kernel of a noiseless data matrix) are recovered in full. Within a
/// degenerate cluster any orthonormal basis may be returned.
EigenPairs smallest_eigenpairs(const LinearOperator& a, int k, const LanczosOptions& opts = {});
EigenPairs smallest_eigenpairs(const SparseSymMatrix& a, int k, const LanczosOptions& opts = {});

/// All-pairs dense eigensolve of the operator (dim matvecs), k <= dim.
EigenPairs dense_smallest_eigenpairs(const LinearOperator& a, int k);
/// Dense path when k >= dim or dim <= 4k, Lanczos otherwise.
EigenPairs lowest_eigenpairs(const LinearOperator& a, int k, const LanczosOptions& opts = {});

/// k smallest eigenpairs of a positive semidefinite A by Lanczos on the
/// largest eigenvalues of (A + sigma I)^{-1}, supplied as `shifted_inverse`.
/// The converged subspace is then Rayleigh-Ritz projected onto A, so values
/// and residuals refer to A itself.
EigenPairs shift_invert_eigenpairs(const LinearOperator& a, const LinearOperator& shifted_inverse,
                                   int k, const LanczosOptions& opts = {});

/// k smallest eigenpairs of a positive semidefinite sparse matrix through
/// shift-invert with sigma = shift_scale * (Gershgorin bound); dense path for
/// tiny matrices.
EigenPairs psd_lowest_eigenpairs(const SparseSymMatrix& a, int k, const LanczosOptions& opts = {},
                                 double shift_scale = 1e-6);

/// ||A||_2 = max |lambda(A)| of a symmetric operator.
double spectral_norm(const LinearOperator& a, const LanczosOptions& opts = {});

struct Svd {
  Matrix u;
  Vector sigma;  // non-negative, non-increasing
  Matrix v;
};

/// Full SVD of a small square matrix.
Svd svd_small(const Matrix& x);

/// Applies the Moore-Penrose pseudoinverse of a connected weighted graph
/// Laplacian. The vertex-0-anchored principal submatrix is factored once at
/// construction; `apply` is const and safe to call concurrently.
class LaplacianPseudoInverse {
 public:
  explicit LaplacianPseudoInverse(const SparseSymMatrix& laplacian);
  ~LaplacianPseudoInverse();
  LaplacianPseudoInverse(LaplacianPseudoInverse&&) noexcept;
  LaplacianPseudoInverse& operator=(LaplacianPseudoInverse&&) noexcept;

  int dim() const { return dim_; }

  /// L^+ y, orthogonal to the all-ones vector.
  Vector apply(const Vector& y) const;
  /// Column-wise L^+ Y.
  Matrix apply(const Matrix& y) const;

 private:
  struct Factor;
  int dim_ = 0;
  std::unique_ptr<Factor> factor_;
};

/// One-shot convenience wrapper around LaplacianPseudoInverse.
Vector laplacian_pinv_apply(const SparseSymMatrix& laplacian, const Vector& y);

/// Sparse SPD solver (LDL^T) used for anchored Laplacian-type systems.
/// Throws DisconnectedGraph when the matrix is numerically singular.
class SpdSolver {
 public:
  explicit SpdSolver(const SparseSymMatrix::Storage& a);
  ~SpdSolver();
  SpdSolver(SpdSolver&&) noexcept;
  SpdSolver& operator=(SpdSolver&&) noexcept;

  Matrix solve(const Matrix& b) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// MatrixMarket coordinate export (symmetric, lower triangle).
void write_matrix_market(const SparseSymMatrix& a, std::ostream& out);

}  // namespace specinit
