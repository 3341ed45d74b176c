#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "specinit/linalg.hpp"

namespace specinit {

enum class Mode { RotationOnly, FullPose };

/// Noisy relative measurement on the directed edge i -> j.
struct RelativeMeasurement {
  int i = 0;
  int j = 0;
  Matrix rotation;     // d x d, in SO(d)
  Vector translation;  // length d; empty for rotation-only data
  double kappa = 1.0;  // rotation concentration
  double tau = 0.0;    // translation precision; 0 for rotation-only data
};

/// Element of SO(d)^n stored as the d x (d n) matrix [R_1, ..., R_n].
struct RotationSet {
  Matrix data;

  RotationSet() = default;
  explicit RotationSet(Matrix m) : data(std::move(m)) {}
  static RotationSet identity(int d, int n);

  int d() const { return static_cast<int>(data.rows()); }
  int n() const { return d() == 0 ? 0 : static_cast<int>(data.cols() / data.rows()); }
  auto block(int i) { return data.middleCols(static_cast<Eigen::Index>(i) * d(), d()); }
  auto block(int i) const { return data.middleCols(static_cast<Eigen::Index>(i) * d(), d()); }

  /// True when every block is orthogonal with det +1 within `tol`.
  bool is_valid(double tol = 1e-8) const;
};

struct PoseSet {
  RotationSet rotations;
  Matrix translations;  // d x n

  int d() const { return rotations.d(); }
  int n() const { return rotations.n(); }
};

struct PoseGraph {
  int d = 3;
  int n = 0;
  std::vector<RelativeMeasurement> edges;
  Mode mode = Mode::FullPose;
  /// Vertex estimates found in the input file, when every node has one.
  std::optional<PoseSet> vertices;

  bool has_translations() const { return mode == Mode::FullPose; }

  /// Checks index ranges, SO(d) membership, precisions and duplicate edges.
  /// Throws ArgumentError describing the first violation.
  void validate() const;
};

/// Reads g2o text (VERTEX_SE2 / EDGE_SE2 / VERTEX_SE3:QUAT / EDGE_SE3:QUAT).
///
/// Information matrices are reduced to isotropic precisions: with Sigma the
/// inverse of the full information matrix and Sigma_t, Sigma_R its
/// translational and rotational diagonal blocks,
///   3D: tau = 3 / tr(Sigma_t),  kappa = 3 / (2 tr(Sigma_R))
///   2D: tau = 2 / tr(Sigma_t),  kappa = 1 / Sigma_theta.
/// Node ids are compacted to [0, n) in ascending id order.
PoseGraph parse_g2o(std::istream& in);
PoseGraph parse_g2o_string(const std::string& text);
PoseGraph read_g2o_file(const std::string& path);

/// Writes edges (and vertices, if given) in g2o format with 17 significant
/// digits. Precisions are encoded as isotropic information matrices that
/// parse_g2o maps back to the same kappa and tau.
void write_g2o(const PoseGraph& graph, std::ostream& out, const PoseSet* vertices = nullptr);

/// VERTEX_SE2 / VERTEX_SE3:QUAT records only.
void write_g2o_vertices(const PoseSet& vertices, std::ostream& out);

struct WeightLaplacians {
  SparseSymMatrix rho;                // L(W^rho), n x n
  std::optional<SparseSymMatrix> tau; // L(W^tau), absent for rotation-only graphs
};

WeightLaplacians weight_laplacians(const PoseGraph& graph);

/// Scalar Laplacian of an edge set with per-edge weights selected by `weight`.
SparseSymMatrix scalar_laplacian(const PoseGraph& graph, double RelativeMeasurement::*weight);

/// True iff the undirected support graph is connected.
bool check_connected(const PoseGraph& graph);

/// Rotation-only copy of a graph (translations and tau dropped).
PoseGraph rotation_only(const PoseGraph& graph);

}  // namespace specinit
