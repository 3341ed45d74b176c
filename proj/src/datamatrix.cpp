#include "specinit/datamatrix.hpp"

#include <algorithm>
#include <type_traits>

#include "specinit/errors.hpp"
#include "specinit/kernels.hpp"

namespace specinit {

SparseSymMatrix rotation_connection_laplacian(const PoseGraph& g) {
  const int d = g.d;
  std::vector<double> degree(g.n, 0.0);
  std::vector<Coordinate> coords;
  coords.reserve(g.edges.size() * d * d + static_cast<size_t>(g.n) * d);
  for (const auto& e : g.edges) {
    degree[e.i] += e.kappa;
    degree[e.j] += e.kappa;
    // Block (i, j) = -kappa R_ij; the symmetric half (j, i) = -kappa R_ij^T
    // is implied by the storage.
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c)
        coords.push_back({e.i * d + r, e.j * d + c, -e.kappa * e.rotation(r, c)});
  }
  for (int i = 0; i < g.n; ++i)
    for (int r = 0; r < d; ++r) coords.push_back({i * d + r, i * d + r, degree[i]});
  return SparseSymMatrix(std::max(g.n, 1) * d, coords, d);
}

// ---------------------------------------------------------------------------

TranslationalOperator::TranslationalOperator(const PoseGraph& g)
    : d_(g.d),
      n_(g.n),
      omega_(Matrix::Zero(g.d, static_cast<Eigen::Index>(g.d) * g.n)),
      l_tau_(scalar_laplacian(g, &RelativeMeasurement::tau)),
      pinv_(l_tau_) {
  std::vector<Eigen::Triplet<double, int>> trips;
  trips.reserve(2 * g.edges.size() * d_);
  for (const auto& e : g.edges) {
    const Vector& t = e.translation;
    omega_.middleCols(e.i * d_, d_).noalias() += e.tau * t * t.transpose();
    for (int c = 0; c < d_; ++c) {
      trips.emplace_back(e.i, e.i * d_ + c, e.tau * t[c]);
      trips.emplace_back(e.j, e.i * d_ + c, -e.tau * t[c]);
    }
  }
  v_.resize(n_, d_ * n_);
  v_.setFromTriplets(trips.begin(), trips.end());
  v_.makeCompressed();
  vt_ = v_.transpose();
  vt_.makeCompressed();
}

void TranslationalOperator::apply(const Vector& x, Vector& y) const {
  y.resize(dim());
  kernels::omp::block_diag_apply(omega_, x, y);
  const Vector vx = v_ * x;
  y.noalias() -= vt_ * pinv_.apply(vx);
}

Vector TranslationalOperator::operator*(const Vector& x) const {
  Vector y(dim());
  apply(x, y);
  return y;
}

LinearOperator TranslationalOperator::as_operator(
    std::shared_ptr<const TranslationalOperator> self) const {
  LinearOperator op;
  op.dim = dim();
  op.apply = [self](const Vector& x, Vector& y) { self->apply(x, y); };
  return op;
}

std::shared_ptr<const TranslationalOperator> translational_data_operator(const PoseGraph& g) {
  if (!g.has_translations()) throw ModeError("translational data requires full-pose measurements");
  if (!check_connected(g)) throw DisconnectedGraph();
  return std::make_shared<const TranslationalOperator>(g);
}

// ---------------------------------------------------------------------------

DataMatrixSet assemble(const PoseGraph& g, Mode mode) {
  if (g.n < 1) throw ArgumentError("graph has no nodes");
  if (!check_connected(g)) throw DisconnectedGraph();
  if (mode == Mode::FullPose && !g.has_translations())
    throw ModeError("full-pose assembly requires translation measurements");

  DataMatrixSet m;
  m.d = g.d;
  m.n = g.n;
  m.mode = mode;
  m.rotation_laplacian = std::make_shared<const SparseSymMatrix>(rotation_connection_laplacian(g));
  m.q = LinearOperator::from_sparse(m.rotation_laplacian);
  if (mode == Mode::FullPose) {
    m.translational = translational_data_operator(g);
    const LinearOperator rot = m.q;
    m.q = rot + m.translational->as_operator(m.translational);
  }
  return m;
}

LinearOperator shifted_inverse(const DataMatrixSet& m, double sigma) {
  if (!(sigma > 0.0)) throw ArgumentError("shift must be positive");
  const int dn = m.dim();
  using Storage = SparseSymMatrix::Storage;
  using Trip = Eigen::Triplet<double, int>;

  std::vector<Trip> trips;
  int offset = 0;
  if (m.translational) {
    const TranslationalOperator& t = *m.translational;
    offset = m.n - 1;
    const Storage la = t.tau_laplacian().anchored(0);
    for (int r = 0; r < la.outerSize(); ++r)
      for (Storage::InnerIterator it(la, r); it; ++it) trips.emplace_back(r, it.col(), it.value());
    const auto& v = t.cross_terms();
    for (int r = 1; r < v.outerSize(); ++r)
      for (std::decay_t<decltype(v)>::InnerIterator it(v, r); it; ++it) {
        trips.emplace_back(r - 1, offset + it.col(), it.value());
        trips.emplace_back(offset + it.col(), r - 1, it.value());
      }
    const Matrix& om = t.omega_blocks();
    const int d = m.d;
    for (int i = 0; i < m.n; ++i)
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c)
          trips.emplace_back(offset + i * d + r, offset + i * d + c, om(r, i * d + c));
  }
  const Storage& rot = m.rotation_laplacian->storage();
  for (int r = 0; r < rot.outerSize(); ++r)
    for (Storage::InnerIterator it(rot, r); it; ++it)
      trips.emplace_back(offset + r, offset + it.col(), it.value());
  for (int r = 0; r < dn; ++r) trips.emplace_back(offset + r, offset + r, sigma);

  Storage full(offset + dn, offset + dn);
  full.setFromTriplets(trips.begin(), trips.end());
  auto solver = std::make_shared<const SpdSolver>(full);

  LinearOperator op;
  op.dim = dn;
  op.norm_bound = 1.0 / sigma;
  op.apply = [solver, offset, dn](const Vector& x, Vector& y) {
    Vector rhs = Vector::Zero(offset + dn);
    rhs.tail(dn) = x;
    y = solver->solve(rhs).col(0).tail(dn);
  };
  return op;
}

EigenPairs data_matrix_eigenpairs(const DataMatrixSet& m, int k, const LanczosOptions& opts,
                                  double shift_scale) {
  if (k >= m.q.dim || m.q.dim <= 4 * k) return dense_smallest_eigenpairs(m.q, k);
  // Q is PSD; a small positive shift keeps the factorization definite while
  // leaving the bottom of the spectrum well separated after inversion.
  const double sigma = shift_scale * std::max(m.rotation_laplacian->gershgorin_bound(), 1e-300);
  return shift_invert_eigenpairs(m.q, shifted_inverse(m, sigma), k, opts);
}

double quadratic_form(const LinearOperator& q, const Matrix& r) {
  if (r.cols() != q.dim) throw DimensionError("estimate does not match operator dimension");
  double total = 0.0;
  Vector y(q.dim);
  for (Eigen::Index row = 0; row < r.rows(); ++row) {
    const Vector x = r.row(row).transpose();
    q.apply(x, y);
    total += x.dot(y);
  }
  return total;
}

void require_same_topology(const PoseGraph& a, const PoseGraph& b) {
  if (a.d != b.d || a.n != b.n || a.edges.size() != b.edges.size())
    throw TopologyMismatch("graphs differ in dimension, node count or edge count");
  for (size_t k = 0; k < a.edges.size(); ++k) {
    const auto& ea = a.edges[k];
    const auto& eb = b.edges[k];
    if (ea.i != eb.i || ea.j != eb.j || ea.kappa != eb.kappa || ea.tau != eb.tau)
      throw TopologyMismatch("edge " + std::to_string(k) + " differs in endpoints or precisions");
  }
}

double perturbation_spectral_norm(const PoseGraph& noisy, const PoseGraph& truth, Mode mode,
                                  const LanczosOptions& opts) {
  require_same_topology(noisy, truth);
  const DataMatrixSet qn = assemble(noisy, mode);
  const DataMatrixSet qt = assemble(truth, mode);
  return spectral_norm(qn.q - qt.q, opts);
}

}  // namespace specinit
