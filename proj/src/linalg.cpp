#include "specinit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>

#include "specinit/errors.hpp"

namespace specinit {

// ---------------------------------------------------------------------------
// SparseSymMatrix

SparseSymMatrix::SparseSymMatrix(int dim, const std::vector<Coordinate>& triangle,
                                 std::optional<int> block_size)
    : block_size_(block_size) {
  if (dim <= 0) throw DimensionError("sparse matrix dimension must be positive");
  if (block_size && (*block_size <= 0 || dim % *block_size != 0))
    throw DimensionError("dimension not divisible by block size");

  std::vector<Eigen::Triplet<double, int>> trips;
  trips.reserve(2 * triangle.size());
  for (const auto& c : triangle) {
    if (c.row < 0 || c.col < 0 || c.row >= dim || c.col >= dim)
      throw DimensionError("coordinate out of range");
    trips.emplace_back(c.row, c.col, c.value);
    if (c.row != c.col) trips.emplace_back(c.col, c.row, c.value);
  }
  storage_.resize(dim, dim);
  storage_.setFromTriplets(trips.begin(), trips.end());
  storage_.makeCompressed();
}

kernels::CsrView SparseSymMatrix::csr() const {
  const int rows = dim();
  const int nnz = static_cast<int>(storage_.nonZeros());
  return {rows, {storage_.outerIndexPtr(), static_cast<size_t>(rows + 1)},
          {storage_.innerIndexPtr(), static_cast<size_t>(nnz)},
          {storage_.valuePtr(), static_cast<size_t>(nnz)}};
}

void SparseSymMatrix::apply(const Vector& x, Vector& y) const {
  y.resize(dim());
  kernels::omp::spmv(csr(), x, y);
}

Vector SparseSymMatrix::operator*(const Vector& x) const {
  Vector y(dim());
  apply(x, y);
  return y;
}

double SparseSymMatrix::gershgorin_bound() const {
  double bound = 0.0;
  for (int r = 0; r < storage_.outerSize(); ++r) {
    double row = 0.0;
    for (Storage::InnerIterator it(storage_, r); it; ++it) row += std::abs(it.value());
    bound = std::max(bound, row);
  }
  return bound;
}

Matrix SparseSymMatrix::to_dense() const { return Matrix(storage_); }

SparseSymMatrix::Storage SparseSymMatrix::anchored(int index) const {
  const int n = dim();
  std::vector<Eigen::Triplet<double, int>> trips;
  trips.reserve(storage_.nonZeros());
  for (int r = 0; r < storage_.outerSize(); ++r) {
    if (r == index) continue;
    for (Storage::InnerIterator it(storage_, r); it; ++it) {
      const int c = static_cast<int>(it.col());
      if (c == index) continue;
      trips.emplace_back(r > index ? r - 1 : r, c > index ? c - 1 : c, it.value());
    }
  }
  Storage out(n - 1, n - 1);
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

// ---------------------------------------------------------------------------
// LinearOperator

LinearOperator LinearOperator::from_sparse(std::shared_ptr<const SparseSymMatrix> a) {
  LinearOperator op;
  op.dim = a->dim();
  op.norm_bound = a->gershgorin_bound();
  op.apply = [a](const Vector& x, Vector& y) { a->apply(x, y); };
  return op;
}

LinearOperator LinearOperator::from_dense(Matrix a) {
  LinearOperator op;
  op.dim = static_cast<int>(a.rows());
  op.norm_bound = a.cwiseAbs().rowwise().sum().maxCoeff();
  auto shared = std::make_shared<const Matrix>(std::move(a));
  op.apply = [shared](const Vector& x, Vector& y) { y.noalias() = (*shared) * x; };
  return op;
}

namespace {

LinearOperator combine(const LinearOperator& a, const LinearOperator& b, double sign) {
  if (a.dim != b.dim) throw DimensionError("operator dimensions differ");
  LinearOperator op;
  op.dim = a.dim;
  if (a.norm_bound && b.norm_bound) op.norm_bound = *a.norm_bound + *b.norm_bound;
  op.apply = [a, b, sign](const Vector& x, Vector& y) {
    Vector tmp(b.dim);
    a.apply(x, y);
    b.apply(x, tmp);
    y += sign * tmp;
  };
  return op;
}

}  // namespace

LinearOperator operator+(const LinearOperator& a, const LinearOperator& b) {
  return combine(a, b, 1.0);
}

LinearOperator operator-(const LinearOperator& a, const LinearOperator& b) {
  return combine(a, b, -1.0);
}

// ---------------------------------------------------------------------------
// Lanczos

namespace {

constexpr int kCheckInterval = 10;

class Lanczos {
 public:
  Lanczos(const LinearOperator& op, const LanczosOptions& opts)
      : op_(op), opts_(opts), rng_(opts.seed) {}

  int matvecs() const { return matvecs_; }

  Vector random_vector() {
    std::normal_distribution<double> normal;
    Vector v(op_.dim);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng_);
    return v;
  }

  Vector apply(const Vector& x) {
    Vector y(op_.dim);
    op_.apply(x, y);
    ++matvecs_;
    return y;
  }

  // Projects out the locked vectors and the first `cols` basis vectors
  // (classical Gram-Schmidt, applied twice).
  void orthogonalize(Vector& v, const Matrix& locked, int cols) const {
    for (int pass = 0; pass < 2; ++pass) {
      if (locked.cols() > 0) v.noalias() -= locked * (locked.transpose() * v);
      if (cols > 0) {
        const auto qb = basis_.leftCols(cols);
        v.noalias() -= qb * (qb.transpose() * v);
      }
    }
  }

  // Callback receives (Ritz values, Ritz coefficient matrix, last beta) and
  // returns true to stop the cycle early.
  using StopCheck = std::function<bool(const Vector&, const Matrix&, double)>;

  // Builds a Krylov basis of at most `m` vectors orthogonal to `locked`.
  // Returns the basis size; the projected tridiagonal matrix is available via
  // ritz().
  int cycle(const Matrix& locked, Vector start, int m, const StopCheck& stop) {
    basis_.resize(op_.dim, m);
    alpha_.setZero(m);
    beta_.setZero(m);
    size_ = 0;
    last_beta_ = 0.0;

    orthogonalize(start, locked, 0);
    double nrm = start.norm();
    if (nrm == 0.0) {
      start = random_vector();
      orthogonalize(start, locked, 0);
      nrm = start.norm();
    }
    basis_.col(0) = start / nrm;

    double scale = 0.0;
    for (int j = 0; j < m; ++j) {
      Vector w = apply(basis_.col(j));
      alpha_[j] = basis_.col(j).dot(w);
      w -= alpha_[j] * basis_.col(j);
      if (j > 0) w -= beta_[j - 1] * basis_.col(j - 1);
      orthogonalize(w, locked, j + 1);
      const double b = w.norm();
      scale = std::max({scale, std::abs(alpha_[j]), b});
      size_ = j + 1;

      if (j + 1 == m) {
        last_beta_ = b;
        break;
      }
      if (b <= 1e-12 * scale) {
        // Invariant subspace reached: continue with a fresh direction.
        Vector fresh = random_vector();
        orthogonalize(fresh, locked, j + 1);
        const double fn = fresh.norm();
        if (fn <= 1e-10 * fresh.size()) {
          last_beta_ = 0.0;
          break;  // whole complement spanned
        }
        beta_[j] = 0.0;
        basis_.col(j + 1) = fresh / fn;
      } else {
        beta_[j] = b;
        basis_.col(j + 1) = w / b;
      }
      if (stop && (j + 1) % kCheckInterval == 0) {
        last_beta_ = beta_[j];
        ritz();
        if (stop(theta_, coeffs_, last_beta_)) break;
      }
      if (matvecs_ >= opts_.max_iter) {
        last_beta_ = beta_[j];
        break;
      }
    }
    ritz();
    return size_;
  }

  const Vector& theta() const { return theta_; }
  const Matrix& coeffs() const { return coeffs_; }
  double last_beta() const { return last_beta_; }

  Vector ritz_vector(int i) const { return basis_.leftCols(size_) * coeffs_.col(i); }

 private:
  void ritz() {
    Matrix t = Matrix::Zero(size_, size_);
    for (int j = 0; j < size_; ++j) {
      t(j, j) = alpha_[j];
      if (j + 1 < size_) t(j, j + 1) = t(j + 1, j) = beta_[j];
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(t);
    theta_ = es.eigenvalues();
    coeffs_ = es.eigenvectors();
  }

  const LinearOperator& op_;
  LanczosOptions opts_;
  std::mt19937_64 rng_;
  int matvecs_ = 0;

  Matrix basis_;
  Vector alpha_, beta_;
  int size_ = 0;
  double last_beta_ = 0.0;
  Vector theta_;
  Matrix coeffs_;
};

double estimated_residual(const Matrix& coeffs, double last_beta, int i) {
  return std::abs(last_beta * coeffs(coeffs.rows() - 1, i));
}

struct Locked {
  Matrix vectors;
  std::vector<double> values;
  std::vector<double> residuals;

  int size() const { return static_cast<int>(values.size()); }

  void push(const Vector& v, double value, double residual) {
    vectors.conservativeResize(v.size(), vectors.cols() + 1);
    vectors.col(vectors.cols() - 1) = v;
    values.push_back(value);
    residuals.push_back(residual);
  }

  void erase(int idx) {
    const Eigen::Index cols = vectors.cols();
    for (Eigen::Index c = idx; c + 1 < cols; ++c) vectors.col(c) = vectors.col(c + 1);
    vectors.conservativeResize(vectors.rows(), cols - 1);
    values.erase(values.begin() + idx);
    residuals.erase(residuals.begin() + idx);
  }
};

}  // namespace

EigenPairs smallest_eigenpairs(const LinearOperator& a, int k, const LanczosOptions& opts) {
  if (k <= 0) throw DimensionError("k must be positive");
  if (k >= a.dim) throw DimensionError("k must be smaller than the operator dimension");

  Lanczos lz(a, opts);
  Locked locked;
  locked.vectors.resize(a.dim, 0);
  double norm_scale = a.norm_bound.value_or(0.0);
  double best_residual = std::numeric_limits<double>::infinity();

  // Accepts Ritz pair i if its true residual is below tolerance; returns the
  // normalized Ritz vector through `x`.
  auto accept = [&](int i, Vector& x, double& residual) {
    x = lz.ritz_vector(i);
    lz.orthogonalize(x, locked.vectors, 0);
    x.normalize();
    const double th = lz.theta()[i];
    residual = (lz.apply(x) - th * x).norm();
    best_residual = std::min(best_residual, residual);
    return residual <= opts.tol * norm_scale;
  };

  Vector start = lz.random_vector();
  bool verifying = false;
  int verifications = 0;

  while (true) {
    if (lz.matvecs() >= opts.max_iter) {
      if (verifying) break;
      throw NoConvergence(lz.matvecs(), best_residual);
    }

    const int want = verifying ? 1 : k - locked.size();
    const int m = std::min(opts.krylov_dim, a.dim - locked.size());
    const int m_eff = std::max(m, std::min(want + 1, a.dim - locked.size()));
    auto stop = [&](const Vector& th, const Matrix& s, double lb) {
      if (th.size() < want) return false;
      const double sc = std::max({norm_scale, std::abs(th[0]), std::abs(th[th.size() - 1])});
      for (int i = 0; i < want; ++i)
        if (estimated_residual(s, lb, i) > 0.1 * opts.tol * sc) return false;
      return true;
    };
    const int size = lz.cycle(locked.vectors, start, m_eff, stop);
    const Vector& theta = lz.theta();
    norm_scale = std::max({norm_scale, std::abs(theta[0]), std::abs(theta[size - 1])});

    if (verifying) {
      // Any eigenvalue below the largest locked one was missed (multiplicity).
      Vector x;
      double residual = 0.0;
      const bool converged = accept(0, x, residual);
      const auto max_it = std::max_element(locked.values.begin(), locked.values.end());
      const double margin = opts.tol * norm_scale;
      if (theta[0] >= *max_it - margin || verifications >= 4 * k) break;
      ++verifications;
      if (converged) {
        locked.erase(static_cast<int>(max_it - locked.values.begin()));
        locked.push(x, theta[0], residual);
        start = lz.random_vector();
        continue;
      }
      if (size < m_eff || lz.matvecs() >= opts.max_iter) break;
      start = lz.ritz_vector(0) + 0.1 * lz.random_vector().normalized();
      continue;
    }

    int locked_now = 0;
    for (int i = 0; i < std::min(want, size); ++i) {
      Vector x;
      double residual = 0.0;
      if (!accept(i, x, residual)) break;
      locked.push(x, theta[i], residual);
      ++locked_now;
    }

    if (locked.size() >= k) {
      verifying = true;
      start = lz.random_vector();
      continue;
    }
    Vector next = Vector::Zero(a.dim);
    for (int i = locked_now; i < std::min(want, size); ++i) next += lz.ritz_vector(i);
    if (next.norm() > 0.0) next.normalize();
    start = next + 0.1 * lz.random_vector().normalized();
  }

  // Sort ascending.
  std::vector<int> order(locked.size());
  for (int i = 0; i < locked.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int l, int r) { return locked.values[l] < locked.values[r]; });

  EigenPairs out;
  out.values.resize(k);
  out.vectors.resize(a.dim, k);
  out.residual_norms.resize(k);
  for (int c = 0; c < k; ++c) {
    out.values[c] = locked.values[order[c]];
    out.vectors.col(c) = locked.vectors.col(order[c]);
    out.residual_norms[c] = locked.residuals[order[c]];
  }
  out.matvecs = lz.matvecs();
  return out;
}

EigenPairs smallest_eigenpairs(const SparseSymMatrix& a, int k, const LanczosOptions& opts) {
  LinearOperator op;
  op.dim = a.dim();
  op.norm_bound = a.gershgorin_bound();
  op.apply = [&a](const Vector& x, Vector& y) { a.apply(x, y); };
  return smallest_eigenpairs(op, k, opts);
}

EigenPairs dense_smallest_eigenpairs(const LinearOperator& a, int k) {
  if (k <= 0 || k > a.dim) throw DimensionError("k must lie in [1, dim]");
  Matrix m(a.dim, a.dim);
  Vector e = Vector::Zero(a.dim), col(a.dim);
  for (int c = 0; c < a.dim; ++c) {
    e[c] = 1.0;
    a.apply(e, col);
    m.col(c) = col;
    e[c] = 0.0;
  }
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  EigenPairs out;
  out.values = es.eigenvalues().head(k);
  out.vectors = es.eigenvectors().leftCols(k);
  out.residual_norms.resize(k);
  for (int i = 0; i < k; ++i)
    out.residual_norms[i] = (m * out.vectors.col(i) - out.values[i] * out.vectors.col(i)).norm();
  out.matvecs = a.dim;
  return out;
}

EigenPairs lowest_eigenpairs(const LinearOperator& a, int k, const LanczosOptions& opts) {
  if (k >= a.dim || a.dim <= 4 * k) return dense_smallest_eigenpairs(a, k);
  return smallest_eigenpairs(a, k, opts);
}

EigenPairs shift_invert_eigenpairs(const LinearOperator& a, const LinearOperator& shifted_inverse,
                                   int k, const LanczosOptions& opts) {
  if (shifted_inverse.dim != a.dim) throw DimensionError("shifted inverse does not match operator");
  // Largest eigenvalues of the inverse are the smallest of its negation.
  LinearOperator neg;
  neg.dim = a.dim;
  neg.apply = [&shifted_inverse](const Vector& x, Vector& y) {
    shifted_inverse.apply(x, y);
    y = -y;
  };
  const EigenPairs inv = smallest_eigenpairs(neg, k, opts);

  Matrix av(a.dim, k);
  Vector col(a.dim);
  for (int i = 0; i < k; ++i) {
    a.apply(inv.vectors.col(i), col);
    av.col(i) = col;
  }
  Matrix h = inv.vectors.transpose() * av;
  h = 0.5 * (h + h.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);

  EigenPairs out;
  out.values = es.eigenvalues();
  out.vectors = inv.vectors * es.eigenvectors();
  const Matrix a_out = av * es.eigenvectors();
  out.residual_norms.resize(k);
  for (int i = 0; i < k; ++i)
    out.residual_norms[i] = (a_out.col(i) - out.values[i] * out.vectors.col(i)).norm();
  out.matvecs = inv.matvecs + k;
  return out;
}

EigenPairs psd_lowest_eigenpairs(const SparseSymMatrix& a, int k, const LanczosOptions& opts,
                                 double shift_scale) {
  const LinearOperator op = LinearOperator::from_sparse(std::make_shared<const SparseSymMatrix>(a));
  if (k >= a.dim() || a.dim() <= 4 * k) return dense_smallest_eigenpairs(op, k);
  const double sigma = shift_scale * std::max(a.gershgorin_bound(), 1e-300);
  SparseSymMatrix::Storage shifted = a.storage();
  for (int i = 0; i < a.dim(); ++i) shifted.coeffRef(i, i) += sigma;
  auto solver = std::make_shared<const SpdSolver>(shifted);
  LinearOperator inv;
  inv.dim = a.dim();
  inv.apply = [solver](const Vector& x, Vector& y) { y = solver->solve(x).col(0); };
  return shift_invert_eigenpairs(op, inv, k, opts);
}

double spectral_norm(const LinearOperator& a, const LanczosOptions& opts) {
  if (a.dim <= 0) throw DimensionError("operator dimension must be positive");
  Lanczos lz(a, opts);
  const Matrix none(a.dim, 0);
  double best_residual = std::numeric_limits<double>::infinity();
  Vector start = lz.random_vector();

  while (true) {
    const int m = std::min(opts.krylov_dim, a.dim);
    auto stop = [&](const Vector& th, const Matrix& s, double lb) {
      const int last = static_cast<int>(th.size()) - 1;
      const double sc = std::max(std::abs(th[0]), std::abs(th[last]));
      return estimated_residual(s, lb, 0) <= 0.1 * opts.tol * sc &&
             estimated_residual(s, lb, last) <= 0.1 * opts.tol * sc;
    };
    const int size = lz.cycle(none, start, m, stop);
    const Vector& theta = lz.theta();
    const int last = size - 1;
    const double scale = std::max(std::abs(theta[0]), std::abs(theta[last]));

    bool ok = true;
    Vector lo = lz.ritz_vector(0), hi = lz.ritz_vector(last);
    for (auto [vec, th] : {std::pair{&lo, theta[0]}, std::pair{&hi, theta[last]}}) {
      vec->normalize();
      const double r = (lz.apply(*vec) - th * *vec).norm();
      best_residual = std::min(best_residual, r);
      if (r > opts.tol * scale) ok = false;
    }
    if (ok) return scale;
    if (lz.matvecs() >= opts.max_iter) throw NoConvergence(lz.matvecs(), best_residual);
    start = lo + hi + 0.1 * lz.random_vector().normalized();
  }
}

// ---------------------------------------------------------------------------
// SVD

Svd svd_small(const Matrix& x) {
  if (x.rows() != x.cols()) throw DimensionError("svd_small expects a square matrix");
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

// ---------------------------------------------------------------------------
// Sparse SPD solves

using ColSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Ldlt = Eigen::SimplicialLDLT<ColSparse, Eigen::Lower, Eigen::AMDOrdering<int>>;

namespace {

void factorize_checked(Ldlt& ldlt, const ColSparse& a) {
  ldlt.compute(a);
  if (ldlt.info() != Eigen::Success) throw DisconnectedGraph("anchored system is singular");
  const Vector diag = ldlt.vectorD();
  const double dmax = diag.cwiseAbs().maxCoeff();
  if (!(diag.minCoeff() > 1e-12 * dmax)) throw DisconnectedGraph("anchored system is singular");
}

}  // namespace

struct SpdSolver::Impl {
  Ldlt ldlt;
};

SpdSolver::SpdSolver(const SparseSymMatrix::Storage& a) : impl_(std::make_unique<Impl>()) {
  factorize_checked(impl_->ldlt, ColSparse(a));
}
SpdSolver::~SpdSolver() = default;
SpdSolver::SpdSolver(SpdSolver&&) noexcept = default;
SpdSolver& SpdSolver::operator=(SpdSolver&&) noexcept = default;

Matrix SpdSolver::solve(const Matrix& b) const { return impl_->ldlt.solve(b); }

struct LaplacianPseudoInverse::Factor {
  std::optional<SpdSolver> solver;
};

LaplacianPseudoInverse::LaplacianPseudoInverse(const SparseSymMatrix& laplacian)
    : dim_(laplacian.dim()), factor_(std::make_unique<Factor>()) {
  if (dim_ > 1) factor_->solver.emplace(laplacian.anchored(0));
}
LaplacianPseudoInverse::~LaplacianPseudoInverse() = default;
LaplacianPseudoInverse::LaplacianPseudoInverse(LaplacianPseudoInverse&&) noexcept = default;
LaplacianPseudoInverse& LaplacianPseudoInverse::operator=(LaplacianPseudoInverse&&) noexcept =
    default;

Matrix LaplacianPseudoInverse::apply(const Matrix& y) const {
  if (y.rows() != dim_) throw DimensionError("pseudoinverse input has wrong length");
  Matrix out = Matrix::Zero(dim_, y.cols());
  if (dim_ == 1) return out;
  const Matrix centered = y.rowwise() - y.colwise().mean();
  out.bottomRows(dim_ - 1) = factor_->solver->solve(centered.bottomRows(dim_ - 1));
  out.rowwise() -= out.colwise().mean();
  return out;
}

Vector LaplacianPseudoInverse::apply(const Vector& y) const {
  return apply(Matrix(y)).col(0);
}

Vector laplacian_pinv_apply(const SparseSymMatrix& laplacian, const Vector& y) {
  return LaplacianPseudoInverse(laplacian).apply(y);
}

void write_matrix_market(const SparseSymMatrix& a, std::ostream& out) {
  const auto& s = a.storage();
  std::vector<Coordinate> lower;
  for (int r = 0; r < s.outerSize(); ++r)
    for (SparseSymMatrix::Storage::InnerIterator it(s, r); it; ++it)
      if (it.col() <= r) lower.push_back({r, static_cast<int>(it.col()), it.value()});
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << a.dim() << ' ' << a.dim() << ' ' << lower.size() << '\n';
  out << std::setprecision(17);
  for (const auto& c : lower) out << c.row + 1 << ' ' << c.col + 1 << ' ' << c.value << '\n';
}

}  // namespace specinit
