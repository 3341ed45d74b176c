#pragma once

// Independent dense reference constructions shared by the unit tests. Nothing
// here calls into the library's assembly code, so agreement with the library
// is a real cross-check.

#include <cmath>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "specinit/linalg.hpp"
#include "specinit/posegraph.hpp"

namespace testutil {

using specinit::Matrix;
using specinit::Vector;
using Rng = std::mt19937_64;

inline Matrix gaussian(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = nd(rng);
  return m;
}

/// Uniform rotation from the QR factorization of a Gaussian matrix.
inline Matrix random_rotation(int d, Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian(d, d, rng));
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < d; ++i)
    if (r(i, i) < 0) q.col(i) *= -1.0;
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

inline Matrix planar(double theta) {
  Matrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

inline specinit::RotationSet random_rotations(int d, int n, Rng& rng) {
  Matrix m(d, d * n);
  for (int i = 0; i < n; ++i) m.middleCols(i * d, d) = random_rotation(d, rng);
  return specinit::RotationSet(m);
}

/// Random connected topology: random spanning tree plus `extra` chords, edge
/// directions random, precisions in [0.5, 2].
inline std::vector<std::pair<int, int>> random_edges(int n, int extra, Rng& rng) {
  std::set<std::pair<int, int>> used;
  std::vector<std::pair<int, int>> edges;
  std::uniform_int_distribution<int> coin(0, 1);
  auto add = [&](int a, int b) {
    if (a == b || used.count({std::min(a, b), std::max(a, b)})) return false;
    used.insert({std::min(a, b), std::max(a, b)});
    edges.push_back(coin(rng) ? std::make_pair(a, b) : std::make_pair(b, a));
    return true;
  };
  for (int v = 1; v < n; ++v) add(v, std::uniform_int_distribution<int>(0, v - 1)(rng));
  const int max_edges = n * (n - 1) / 2;
  std::uniform_int_distribution<int> node(0, n - 1);
  for (int k = 0; k < extra && static_cast<int>(edges.size()) < max_edges;)
    if (add(node(rng), node(rng))) ++k;
  return edges;
}

/// Graph whose measurements are exactly consistent with (truth_r, truth_t)
/// when `noise` is zero; otherwise rotations and translations get random
/// perturbations of size `noise`.
inline specinit::PoseGraph make_graph(int d, int n, const std::vector<std::pair<int, int>>& edges,
                                      const specinit::RotationSet& truth_r, const Matrix& truth_t,
                                      bool full, double noise, Rng& rng) {
  specinit::PoseGraph g;
  g.d = d;
  g.n = n;
  g.mode = full ? specinit::Mode::FullPose : specinit::Mode::RotationOnly;
  std::uniform_real_distribution<double> w(0.5, 2.0);
  for (auto [i, j] : edges) {
    specinit::RelativeMeasurement e;
    e.i = i;
    e.j = j;
    e.rotation = truth_r.block(i).transpose() * truth_r.block(j);
    if (noise > 0) {
      Matrix s = noise * gaussian(d, d, rng);
      s = 0.5 * (s - s.transpose()).eval();
      // Polar factor of I + S + S^2/2: a rotation close to exp(S).
      Matrix a = Matrix::Identity(d, d) + s + 0.5 * s * s;
      Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
      e.rotation = e.rotation * (svd.matrixU() * svd.matrixV().transpose());
    }
    e.kappa = w(rng);
    if (full) {
      e.translation = truth_r.block(i).transpose() * (truth_t.col(j) - truth_t.col(i));
      if (noise > 0) e.translation += noise * gaussian(d, 1, rng);
      e.tau = w(rng);
    }
    g.edges.push_back(std::move(e));
  }
  return g;
}

inline specinit::PoseGraph random_graph(int d, int n, int extra, bool full, double noise, Rng& rng) {
  const auto edges = random_edges(n, extra, rng);
  const auto r = random_rotations(d, n, rng);
  const Matrix t = 3.0 * gaussian(d, n, rng);
  return make_graph(d, n, edges, r, t, full, noise, rng);
}

/// Dense scalar Laplacian with the given per-edge weight.
inline Matrix dense_scalar_laplacian(const specinit::PoseGraph& g, bool use_tau) {
  Matrix l = Matrix::Zero(g.n, g.n);
  for (const auto& e : g.edges) {
    const double w = use_tau ? e.tau : e.kappa;
    l(e.i, e.i) += w;
    l(e.j, e.j) += w;
    l(e.i, e.j) -= w;
    l(e.j, e.i) -= w;
  }
  return l;
}

/// Dense rotation connection Laplacian, built entry by entry.
inline Matrix dense_connection_laplacian(const specinit::PoseGraph& g) {
  const int d = g.d;
  Matrix l = Matrix::Zero(d * g.n, d * g.n);
  for (const auto& e : g.edges) {
    l.block(e.i * d, e.i * d, d, d) += e.kappa * Matrix::Identity(d, d);
    l.block(e.j * d, e.j * d, d, d) += e.kappa * Matrix::Identity(d, d);
    l.block(e.i * d, e.j * d, d, d) -= e.kappa * e.rotation;
    l.block(e.j * d, e.i * d, d, d) -= e.kappa * e.rotation.transpose();
  }
  return l;
}

/// Moore-Penrose pseudoinverse of a symmetric matrix by eigendecomposition.
inline Matrix dense_pinv(const Matrix& a, double rel_tol = 1e-10) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const double cut = rel_tol * es.eigenvalues().cwiseAbs().maxCoeff();
  Vector inv = es.eigenvalues();
  for (int i = 0; i < inv.size(); ++i) inv[i] = std::abs(inv[i]) > cut ? 1.0 / inv[i] : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

/// Dense translational data matrix Omega - V^T L(W^tau)^+ V.
inline Matrix dense_q_tau(const specinit::PoseGraph& g) {
  const int d = g.d, n = g.n;
  Matrix omega = Matrix::Zero(d * n, d * n);
  Matrix v = Matrix::Zero(n, d * n);
  for (const auto& e : g.edges) {
    const Vector& t = e.translation;
    omega.block(e.i * d, e.i * d, d, d) += e.tau * t * t.transpose();
    v.block(e.i, e.i * d, 1, d) += e.tau * t.transpose();
    v.block(e.j, e.i * d, 1, d) -= e.tau * t.transpose();
  }
  return omega - v.transpose() * dense_pinv(dense_scalar_laplacian(g, true)) * v;
}

/// Materializes a matrix-free operator column by column.
inline Matrix dense_of(const specinit::LinearOperator& op) {
  Matrix m(op.dim, op.dim);
  Vector e = Vector::Zero(op.dim);
  for (int c = 0; c < op.dim; ++c) {
    e[c] = 1.0;
    m.col(c) = op(e);
    e[c] = 0.0;
  }
  return m;
}

inline Vector ascending_eigenvalues(const Matrix& a) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly)
      .eigenvalues();
}

/// min over G in SO(2) of ||X - G Y||_F by brute force over `steps` angles.
inline double grid_orbit_distance_2d(const Matrix& x, const Matrix& y, int steps) {
  double best = INFINITY;
  for (int k = 0; k < steps; ++k) {
    const double theta = 2.0 * M_PI * k / steps;
    best = std::min(best, (x - planar(theta) * y).norm());
  }
  return best;
}

}  // namespace testutil
