#include "specinit/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <queue>

#include <Eigen/LU>

#include "specinit/errors.hpp"
#include "specinit/kernels.hpp"

namespace specinit {

Matrix project_to_SOd(const Matrix& x) {
  const Svd s = svd_small(x);
  const Eigen::Index d = x.rows();
  Vector xi = Vector::Ones(d);
  xi[d - 1] = (s.u * s.v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return s.u * xi.asDiagonal() * s.v.transpose();
}

RotationSet round_to_rotations(const Matrix& y) {
  Matrix out;
  kernels::omp::round_blocks(y, out);
  return RotationSet(std::move(out));
}

// ---------------------------------------------------------------------------

namespace {

RelaxationSolution relaxation_from(const LinearOperator& q, int d, const SpectralOptions& opts,
                                   const std::function<EigenPairs(int)>& solve) {
  if (d <= 0 || q.dim % d != 0) throw DimensionError("operator dimension is not a multiple of d");
  const int n = q.dim / d;
  const bool with_gap = opts.compute_eigengap && q.dim > d;
  const int k = with_gap ? d + 1 : d;

  const EigenPairs pairs = solve(k);

  RelaxationSolution sol;
  sol.eigenvalues = pairs.values.head(d);
  sol.residuals = pairs.residual_norms.head(d);
  sol.y_star = std::sqrt(static_cast<double>(n)) * pairs.vectors.leftCols(d).transpose();
  sol.p_star = n * sol.eigenvalues.sum();
  sol.eigengap = with_gap ? pairs.values[d] - pairs.values[d - 1]
                          : std::numeric_limits<double>::quiet_NaN();
  sol.matvecs = pairs.matvecs;
  return sol;
}

}  // namespace

RelaxationSolution solve_relaxation(const LinearOperator& q, int d, const SpectralOptions& opts) {
  return relaxation_from(q, d, opts, [&](int k) { return lowest_eigenpairs(q, k, opts.lanczos()); });
}

RelaxationSolution solve_relaxation(const DataMatrixSet& m, const SpectralOptions& opts) {
  if (!opts.shift_invert) return solve_relaxation(m.q, m.d, opts);
  return relaxation_from(m.q, m.d, opts, [&](int k) {
    return data_matrix_eigenpairs(m, k, opts.lanczos(), opts.shift_scale);
  });
}

void orient_relaxation(Matrix& y) {
  const int d = static_cast<int>(y.rows());
  const int n = d == 0 ? 0 : static_cast<int>(y.cols() / d);
  // Y* is only determined up to O(d). With a reflection every block of a
  // (near) consistent solution has det < 0 and blockwise rounding would not
  // recover it, so pick the optimal representative with det > 0 in the
  // majority of blocks.
  int negative = 0;
  for (int i = 0; i < n; ++i)
    if (y.middleCols(static_cast<Eigen::Index>(i) * d, d).determinant() < 0) ++negative;
  if (2 * negative > n) y.row(d - 1) *= -1.0;
}

SpectralResult spectral_initialize(const PoseGraph& graph, Mode mode, const SpectralOptions& opts) {
  const DataMatrixSet m = assemble(graph, mode);
  RelaxationSolution sol = solve_relaxation(m, opts);
  orient_relaxation(sol.y_star);
  RotationSet r = round_to_rotations(sol.y_star);
  return {std::move(r), std::move(sol)};
}

// ---------------------------------------------------------------------------

RotationSet chordal_initialize(const PoseGraph& graph) {
  if (!check_connected(graph)) throw DisconnectedGraph();
  const int d = graph.d, n = graph.n;
  if (n == 1) return RotationSet::identity(d, 1);

  const SparseSymMatrix l = rotation_connection_laplacian(graph);
  const int rest = d * (n - 1);
  const SparseSymMatrix::Storage lrr = l.storage().bottomRightCorner(rest, rest);
  const Matrix lr1 = Matrix(l.storage().bottomLeftCorner(rest, d));

  // Minimizing tr([I X] L [I X]^T) gives L_rr X^T = -L_r1.
  const SpdSolver solver(lrr);
  const Matrix z = solver.solve(-lr1);

  Matrix unrounded(d, static_cast<Eigen::Index>(d) * n);
  unrounded.leftCols(d).setIdentity();
  unrounded.rightCols(rest) = z.transpose();
  return round_to_rotations(unrounded);
}

PoseSet recover_translations(const PoseGraph& graph, const RotationSet& rotations) {
  if (!graph.has_translations()) throw ModeError("translation recovery needs translation measurements");
  if (!check_connected(graph)) throw DisconnectedGraph();
  if (rotations.n() != graph.n || rotations.d() != graph.d)
    throw DimensionError("rotation estimate does not match graph");
  const int d = graph.d, n = graph.n;

  Matrix rhs = Matrix::Zero(n, d);
  for (const auto& e : graph.edges) {
    const Vector c = rotations.block(e.i) * e.translation;
    rhs.row(e.j) += e.tau * c.transpose();
    rhs.row(e.i) -= e.tau * c.transpose();
  }
  const LaplacianPseudoInverse pinv(scalar_laplacian(graph, &RelativeMeasurement::tau));
  Matrix t = pinv.apply(rhs);
  t.rowwise() -= t.row(0).eval();
  return {rotations, t.transpose()};
}

PoseSet odometry_initialize(const PoseGraph& graph) {
  const int d = graph.d, n = graph.n;
  if (!check_connected(graph)) throw DisconnectedGraph();
  const bool has_t = graph.has_translations();

  // adjacency: node -> (edge index, forward?)
  std::vector<std::vector<std::pair<int, bool>>> adj(n);
  std::map<std::pair<int, int>, std::pair<int, bool>> by_pair;
  for (int k = 0; k < static_cast<int>(graph.edges.size()); ++k) {
    const auto& e = graph.edges[k];
    adj[e.i].push_back({k, true});
    adj[e.j].push_back({k, false});
    by_pair.try_emplace({e.i, e.j}, k, true);
    by_pair.try_emplace({e.j, e.i}, k, false);
  }

  PoseSet out{RotationSet::identity(d, n), Matrix::Zero(d, n)};
  // Propagate pose across edge k from `from` to the other endpoint.
  auto step = [&](int k, bool forward, int from) {
    const auto& e = graph.edges[k];
    const int to = forward ? e.j : e.i;
    const Matrix ra = out.rotations.block(from);
    if (forward) {
      out.rotations.block(to) = ra * e.rotation;
      if (has_t) out.translations.col(to) = out.translations.col(from) + ra * e.translation;
    } else {
      const Matrix rb = ra * e.rotation.transpose();
      out.rotations.block(to) = rb;
      if (has_t) out.translations.col(to) = out.translations.col(from) - rb * e.translation;
    }
    return to;
  };

  bool chain = true;
  for (int i = 0; i + 1 < n && chain; ++i) chain = by_pair.count({i, i + 1}) > 0;
  if (chain) {
    for (int i = 0; i + 1 < n; ++i) {
      const auto [k, forward] = by_pair.at({i, i + 1});
      step(k, forward, i);
    }
    return out;
  }

  std::vector<bool> seen(n, false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (const auto& [k, forward] : adj[u]) {
      const auto& e = graph.edges[k];
      const int v = forward ? e.j : e.i;
      if (seen[v]) continue;
      seen[v] = true;
      step(k, forward, u);
      frontier.push(v);
    }
  }
  return out;
}

}  // namespace specinit
