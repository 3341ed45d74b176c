#include "specinit/metrics.hpp"

#include <cmath>

#include "specinit/errors.hpp"
#include "specinit/spectral.hpp"

namespace specinit {

namespace {

void require_same_shape(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols() || x.rows() == 0 || x.cols() % x.rows() != 0)
    throw DimensionError("orbit distance operands must both be d x dn with matching shape");
}

}  // namespace

AlignmentResult so_orbit_distance(const Matrix& x, const Matrix& y) {
  require_same_shape(x, y);
  Matrix g = project_to_SOd(x * y.transpose());
  const double dist = (x - g * y).norm();
  return {dist, std::move(g)};
}

AlignmentResult o_orbit_distance(const Matrix& x, const Matrix& y) {
  require_same_shape(x, y);
  const Svd s = svd_small(x * y.transpose());
  Matrix g = s.u * s.v.transpose();
  const double dist = (x - g * y).norm();
  return {dist, std::move(g)};
}

// ---------------------------------------------------------------------------

namespace {

double rotation_cost(const PoseGraph& g, const RotationSet& r) {
  double total = 0.0;
  for (const auto& e : g.edges)
    total += e.kappa * (r.block(e.j) - r.block(e.i) * e.rotation).squaredNorm();
  return total;
}

void check_estimate(const PoseGraph& g, const RotationSet& r) {
  if (r.d() != g.d || r.n() != g.n) throw DimensionError("estimate does not match graph");
}

}  // namespace

double evaluate_cost(const PoseGraph& graph, const RotationSet& est, CostKind kind) {
  check_estimate(graph, est);
  switch (kind) {
    case CostKind::RotationAveraging:
      return rotation_cost(graph, est);
    case CostKind::PoseGraph:
      throw ModeError("pose-graph cost needs translations; pass a PoseSet");
    case CostKind::Quadratic: {
      const DataMatrixSet m = assemble(graph, graph.mode);
      return quadratic_form(m.q, est.data);
    }
  }
  throw ArgumentError("unknown cost kind");
}

double evaluate_cost(const PoseGraph& graph, const PoseSet& est, CostKind kind) {
  if (kind != CostKind::PoseGraph) return evaluate_cost(graph, est.rotations, kind);
  if (!graph.has_translations()) throw ModeError("pose-graph cost on a rotation-only graph");
  check_estimate(graph, est.rotations);
  double total = rotation_cost(graph, est.rotations);
  for (const auto& e : graph.edges) {
    const Vector r = est.translations.col(e.j) - est.translations.col(e.i) -
                     est.rotations.block(e.i) * e.translation;
    total += e.tau * r.squaredNorm();
  }
  return total;
}

OrthogonalDecomposition orthogonal_decomposition(const Matrix& r_hat, const Matrix& r_true) {
  require_same_shape(r_hat, r_true);
  const double n = static_cast<double>(r_true.cols() / r_true.rows());
  OrthogonalDecomposition out;
  out.k = ((r_hat * r_true.transpose()) * r_true) / n;
  out.p = r_hat - out.k;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Returns R Q (d x dn).
Matrix right_multiply(const LinearOperator& q, const Matrix& r) {
  Matrix out(r.rows(), r.cols());
  Vector y(q.dim);
  for (Eigen::Index row = 0; row < r.rows(); ++row) {
    q.apply(r.row(row).transpose(), y);
    out.row(row) = y.transpose();
  }
  return out;
}

Matrix tangent_project(const Matrix& r, const Matrix& g) {
  const Eigen::Index d = r.rows();
  const Eigen::Index n = r.cols() / d;
  Matrix out(d, r.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Matrix ri = r.middleCols(i * d, d);
    const Matrix m = ri.transpose() * g.middleCols(i * d, d);
    out.middleCols(i * d, d) = ri * (0.5 * (m - m.transpose()));
  }
  return out;
}

}  // namespace

Matrix riemannian_gradient(const LinearOperator& q, const Matrix& r) {
  return tangent_project(r, 2.0 * right_multiply(q, r));
}

RefineResult refine(const LinearOperator& q, const RotationSet& init, const RefineOptions& opts) {
  if (init.data.cols() != q.dim) throw DimensionError("initial estimate does not match operator");

  RefineResult res;
  Matrix r = init.data;
  Matrix rq = right_multiply(q, r);
  res.initial_cost = r.cwiseProduct(rq).sum();
  double step = opts.initial_step;

  int it = 0;
  double gnorm = 0.0;
  for (;; ++it) {
    const Matrix grad = tangent_project(r, 2.0 * rq);
    gnorm = grad.norm();
    if (gnorm <= opts.grad_tol) {
      res.converged = true;
      break;
    }
    if (it >= opts.max_iter) break;

    bool accepted = false;
    step *= 2.0;
    for (int bt = 0; bt < opts.max_backtracks; ++bt, step *= opts.shrink) {
      const Matrix trial = round_to_rotations(r - step * grad).data;
      const Matrix trial_rq = right_multiply(q, trial);
      // f(R') - f(R) = <(R' - R) Q, R' + R> for symmetric Q. Differencing two
      // full costs loses everything below ~1e-16 of their magnitude, which
      // stalls the line search long before the gradient is small.
      const double decrease = (trial - r).cwiseProduct(trial_rq + rq).sum();
      if (decrease <= -opts.armijo * step * gnorm * gnorm) {
        r = trial;
        rq = trial_rq;
        accepted = true;
        break;
      }
    }
    if (!accepted) {  // no descent possible at working precision
      res.stalled = true;
      break;
    }
  }

  res.final_cost = r.cwiseProduct(rq).sum();
  res.rotations = RotationSet(std::move(r));
  res.iterations = it;
  res.gradient_norm = gnorm;
  return res;
}

RefineResult refine(const PoseGraph& graph, const RotationSet& init, const RefineOptions& opts) {
  const DataMatrixSet m = assemble(graph, graph.mode);
  return refine(m.q, init, opts);
}

}  // namespace specinit
