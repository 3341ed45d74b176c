#pragma once

#include "specinit/datamatrix.hpp"
#include "specinit/posegraph.hpp"

namespace specinit {

struct AlignmentResult {
  double distance = 0.0;
  Matrix gauge;  // G* with X ~ G* Y
};

/// min over G in SO(d) of ||X - G Y||_F for d x (d n) matrices.
AlignmentResult so_orbit_distance(const Matrix& x, const Matrix& y);
/// min over G in O(d) of ||X - G Y||_F; Y may be an unrounded relaxation
/// solution.
AlignmentResult o_orbit_distance(const Matrix& x, const Matrix& y);

inline AlignmentResult so_orbit_distance(const RotationSet& x, const RotationSet& y) {
  return so_orbit_distance(x.data, y.data);
}
inline AlignmentResult o_orbit_distance(const RotationSet& x, const RotationSet& y) {
  return o_orbit_distance(x.data, y.data);
}

enum class CostKind {
  RotationAveraging,  // sum kappa ||R_j - R_i R_ij||^2
  PoseGraph,          // adds tau ||t_j - t_i - R_i t_ij||^2; needs a PoseSet
  Quadratic,          // tr(Q R^T R) with Q in the graph's native mode
};

double evaluate_cost(const PoseGraph& graph, const RotationSet& est, CostKind kind);
double evaluate_cost(const PoseGraph& graph, const PoseSet& est, CostKind kind);

struct OrthogonalDecomposition {
  Matrix k;  // (1/n) R_hat R_true^T R_true
  Matrix p;  // R_hat - K
};

/// Splits R_hat into its projection onto {W R_true} and the orthogonal
/// residual.
OrthogonalDecomposition orthogonal_decomposition(const Matrix& r_hat, const Matrix& r_true);

struct RefineOptions {
  int max_iter = 500;
  double grad_tol = 1e-6;   // absolute, on the Riemannian gradient norm
  double initial_step = 1.0;
  double armijo = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 60;
};

struct RefineResult {
  RotationSet rotations;
  int iterations = 0;
  double gradient_norm = 0.0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;  // gradient norm reached grad_tol
  bool stalled = false;    // line search found no decrease (working-precision floor)
};

/// Riemannian gradient descent with Armijo backtracking on
/// f(R) = tr(Q R^T R) over SO(d)^n. Cost is non-increasing across iterations.
/// Stops when the Riemannian gradient norm drops to grad_tol, after max_iter
/// iterations, or when backtracking finds no decrease.
RefineResult refine(const LinearOperator& q, const RotationSet& init, const RefineOptions& opts = {});
RefineResult refine(const PoseGraph& graph, const RotationSet& init, const RefineOptions& opts = {});

/// Riemannian gradient of tr(Q R^T R): blockwise tangent projection of 2 R Q.
Matrix riemannian_gradient(const LinearOperator& q, const Matrix& r);

}  // namespace specinit
