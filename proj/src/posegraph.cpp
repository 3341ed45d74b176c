#include "specinit/posegraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "specinit/errors.hpp"

namespace specinit {

RotationSet RotationSet::identity(int d, int n) {
  RotationSet r(Matrix(d, static_cast<Eigen::Index>(d) * n));
  for (int i = 0; i < n; ++i) r.block(i).setIdentity();
  return r;
}

bool RotationSet::is_valid(double tol) const {
  const int dd = d();
  for (int i = 0; i < n(); ++i) {
    const Matrix b = block(i);
    if ((b.transpose() * b - Matrix::Identity(dd, dd)).norm() > tol) return false;
    if (std::abs(b.determinant() - 1.0) > tol) return false;
  }
  return true;
}

void PoseGraph::validate() const {
  if (d != 2 && d != 3) throw ArgumentError("dimension must be 2 or 3");
  std::set<std::pair<int, int>> seen;
  for (const auto& e : edges) {
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n)
      throw ArgumentError("edge endpoint out of range");
    if (e.i == e.j) throw ArgumentError("self-loop edge");
    if (!seen.insert({e.i, e.j}).second) throw ArgumentError("duplicate directed edge");
    if (e.rotation.rows() != d || e.rotation.cols() != d)
      throw ArgumentError("rotation measurement has wrong size");
    if (!RotationSet(e.rotation).is_valid(1e-8))
      throw ArgumentError("rotation measurement is not in SO(d)");
    if (!(e.kappa > 0.0)) throw ArgumentError("kappa must be positive");
    if (mode == Mode::FullPose) {
      if (e.translation.size() != d) throw ArgumentError("translation measurement has wrong size");
      if (!(e.tau >= 0.0)) throw ArgumentError("tau must be non-negative");
    }
  }
}

// ---------------------------------------------------------------------------
// g2o

namespace {

struct RawEdge {
  long id_i, id_j;
  Matrix rotation;
  Vector translation;
  double kappa, tau;
  int line;
};

struct RawVertex {
  long id;
  Matrix rotation;
  Vector translation;
};

Matrix rot2(double theta) {
  Matrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

Matrix quat_to_rot(double qx, double qy, double qz, double qw, int line) {
  Eigen::Quaterniond q(qw, qx, qy, qz);
  if (!(q.norm() > 0.0) || !std::isfinite(q.norm())) throw ParseError(line, "degenerate quaternion");
  return q.normalized().toRotationMatrix();
}

// Fills the symmetric k x k information matrix from its upper triangle.
Matrix information(const std::vector<double>& upper, int k) {
  Matrix info(k, k);
  size_t idx = 0;
  for (int r = 0; r < k; ++r)
    for (int c = r; c < k; ++c) info(r, c) = info(c, r) = upper[idx++];
  return info;
}

std::pair<double, double> isotropize(const Matrix& info, int d, int line) {
  Eigen::FullPivLU<Matrix> lu(info);
  if (!lu.isInvertible()) throw ParseError(line, "singular information matrix");
  const Matrix cov = lu.inverse();
  const double tr_t = cov.topLeftCorner(d, d).trace();
  const int rdim = d == 2 ? 1 : 3;
  const double tr_r = cov.bottomRightCorner(rdim, rdim).trace();
  if (!(tr_t > 0.0) || !(tr_r > 0.0)) throw ParseError(line, "information matrix is not positive definite");
  const double tau = d / tr_t;
  const double kappa = d == 2 ? 1.0 / tr_r : 3.0 / (2.0 * tr_r);
  return {kappa, tau};
}

std::vector<double> read_numbers(std::istringstream& ss, size_t count, int line,
                                 const std::string& tag) {
  std::vector<double> v(count);
  for (size_t k = 0; k < count; ++k) {
    if (!(ss >> v[k])) throw ParseError(line, tag + ": expected " + std::to_string(count) + " numeric fields");
  }
  std::string extra;
  if (ss >> extra) throw ParseError(line, tag + ": unexpected trailing field '" + extra + "'");
  return v;
}

}  // namespace

PoseGraph parse_g2o(std::istream& in) {
  std::vector<RawEdge> raw_edges;
  std::vector<RawVertex> raw_vertices;
  int dim = 0;
  auto set_dim = [&](int d) {
    if (dim != 0 && dim != d) throw MixedDimension();
    dim = d;
  };

  std::string text;
  int line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    const auto hash = text.find('#');
    if (hash != std::string::npos) text.resize(hash);
    std::istringstream ss(text);
    std::string tag;
    if (!(ss >> tag)) continue;

    if (tag == "EDGE_SE3:QUAT") {
      set_dim(3);
      long i, j;
      if (!(ss >> i >> j)) throw ParseError(line_no, tag + ": missing node ids");
      const auto v = read_numbers(ss, 7 + 21, line_no, tag);
      RawEdge e{i, j, quat_to_rot(v[3], v[4], v[5], v[6], line_no), Vector(3), 0, 0, line_no};
      e.translation << v[0], v[1], v[2];
      std::tie(e.kappa, e.tau) =
          isotropize(information({v.begin() + 7, v.end()}, 6), 3, line_no);
      raw_edges.push_back(std::move(e));
    } else if (tag == "EDGE_SE2") {
      set_dim(2);
      long i, j;
      if (!(ss >> i >> j)) throw ParseError(line_no, tag + ": missing node ids");
      const auto v = read_numbers(ss, 3 + 6, line_no, tag);
      RawEdge e{i, j, rot2(v[2]), Vector(2), 0, 0, line_no};
      e.translation << v[0], v[1];
      std::tie(e.kappa, e.tau) =
          isotropize(information({v.begin() + 3, v.end()}, 3), 2, line_no);
      raw_edges.push_back(std::move(e));
    } else if (tag == "VERTEX_SE3:QUAT") {
      set_dim(3);
      long id;
      if (!(ss >> id)) throw ParseError(line_no, tag + ": missing id");
      const auto v = read_numbers(ss, 7, line_no, tag);
      RawVertex vx{id, quat_to_rot(v[3], v[4], v[5], v[6], line_no), Vector(3)};
      vx.translation << v[0], v[1], v[2];
      raw_vertices.push_back(std::move(vx));
    } else if (tag == "VERTEX_SE2") {
      set_dim(2);
      long id;
      if (!(ss >> id)) throw ParseError(line_no, tag + ": missing id");
      const auto v = read_numbers(ss, 3, line_no, tag);
      RawVertex vx{id, rot2(v[2]), Vector(2)};
      vx.translation << v[0], v[1];
      raw_vertices.push_back(std::move(vx));
    } else if (tag == "FIX") {
      continue;  // gauge fixing is implicit
    } else {
      throw ParseError(line_no, "unsupported record '" + tag + "'");
    }
  }

  std::vector<long> ids;
  for (const auto& e : raw_edges) ids.insert(ids.end(), {e.id_i, e.id_j});
  for (const auto& v : raw_vertices) ids.push_back(v.id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::map<long, int> compact;
  for (size_t k = 0; k < ids.size(); ++k) compact[ids[k]] = static_cast<int>(k);

  PoseGraph g;
  g.d = dim == 0 ? 3 : dim;
  g.n = static_cast<int>(ids.size());
  g.mode = Mode::FullPose;
  std::set<std::pair<int, int>> seen;
  for (auto& e : raw_edges) {
    const int i = compact.at(e.id_i), j = compact.at(e.id_j);
    if (i == j) throw ParseError(e.line, "self-loop edge");
    if (!seen.insert({i, j}).second) throw ParseError(e.line, "duplicate directed edge");
    g.edges.push_back({i, j, std::move(e.rotation), std::move(e.translation), e.kappa, e.tau});
  }

  if (!raw_vertices.empty()) {
    std::vector<bool> have(g.n, false);
    PoseSet ps{RotationSet::identity(g.d, g.n), Matrix::Zero(g.d, g.n)};
    for (const auto& v : raw_vertices) {
      const int k = compact.at(v.id);
      have[k] = true;
      ps.rotations.block(k) = v.rotation;
      ps.translations.col(k) = v.translation;
    }
    if (std::all_of(have.begin(), have.end(), [](bool b) { return b; })) g.vertices = std::move(ps);
  }
  return g;
}

PoseGraph parse_g2o_string(const std::string& text) {
  std::istringstream in(text);
  return parse_g2o(in);
}

PoseGraph read_g2o_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open '" + path + "'");
  return parse_g2o(in);
}

void write_g2o_vertices(const PoseSet& vertices, std::ostream& out) {
  const auto precision = out.precision(17);
  for (int k = 0; k < vertices.n(); ++k) {
    const Vector t = vertices.translations.col(k);
    const Matrix r = vertices.rotations.block(k);
    if (vertices.d() == 3) {
      const Eigen::Quaterniond q{Eigen::Matrix3d(r)};
      out << "VERTEX_SE3:QUAT " << k << ' ' << t[0] << ' ' << t[1] << ' ' << t[2] << ' '
          << q.x() << ' ' << q.y() << ' ' << q.z() << ' ' << q.w() << '\n';
    } else {
      out << "VERTEX_SE2 " << k << ' ' << t[0] << ' ' << t[1] << ' '
          << std::atan2(r(1, 0), r(0, 0)) << '\n';
    }
  }
  out.precision(precision);
}

void write_g2o(const PoseGraph& g, std::ostream& out, const PoseSet* vertices) {
  if (!g.has_translations()) throw ModeError("g2o export requires translation measurements");
  if (vertices) write_g2o_vertices(*vertices, out);
  out << std::setprecision(17);
  for (const auto& e : g.edges) {
    const Vector& t = e.translation;
    if (g.d == 3) {
      const Eigen::Quaterniond q{Eigen::Matrix3d(e.rotation)};
      out << "EDGE_SE3:QUAT " << e.i << ' ' << e.j << ' ' << t[0] << ' ' << t[1] << ' ' << t[2]
          << ' ' << q.x() << ' ' << q.y() << ' ' << q.z() << ' ' << q.w();
      // Isotropic information: tau I_3 (translation), 2 kappa I_3 (rotation).
      const double diag[6] = {e.tau, e.tau, e.tau, 2 * e.kappa, 2 * e.kappa, 2 * e.kappa};
      for (int r = 0; r < 6; ++r)
        for (int c = r; c < 6; ++c) out << ' ' << (r == c ? diag[r] : 0.0);
    } else {
      out << "EDGE_SE2 " << e.i << ' ' << e.j << ' ' << t[0] << ' ' << t[1] << ' '
          << std::atan2(e.rotation(1, 0), e.rotation(0, 0));
      const double diag[3] = {e.tau, e.tau, e.kappa};
      for (int r = 0; r < 3; ++r)
        for (int c = r; c < 3; ++c) out << ' ' << (r == c ? diag[r] : 0.0);
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Graph structure

SparseSymMatrix scalar_laplacian(const PoseGraph& g, double RelativeMeasurement::*weight) {
  std::vector<Coordinate> coords;
  coords.reserve(3 * g.edges.size() + g.n);
  for (int k = 0; k < g.n; ++k) coords.push_back({k, k, 0.0});
  for (const auto& e : g.edges) {
    const double w = e.*weight;
    coords.push_back({e.i, e.i, w});
    coords.push_back({e.j, e.j, w});
    coords.push_back({std::max(e.i, e.j), std::min(e.i, e.j), -w});
  }
  return SparseSymMatrix(std::max(g.n, 1), coords);
}

WeightLaplacians weight_laplacians(const PoseGraph& g) {
  WeightLaplacians out{scalar_laplacian(g, &RelativeMeasurement::kappa), std::nullopt};
  if (g.has_translations()) out.tau = scalar_laplacian(g, &RelativeMeasurement::tau);
  return out;
}

bool check_connected(const PoseGraph& g) {
  if (g.n <= 1) return true;
  std::vector<int> parent(g.n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int components = g.n;
  for (const auto& e : g.edges) {
    const int a = find(e.i), b = find(e.j);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

PoseGraph rotation_only(const PoseGraph& g) {
  PoseGraph out = g;
  out.mode = Mode::RotationOnly;
  for (auto& e : out.edges) {
    e.translation.resize(0);
    e.tau = 0.0;
  }
  if (out.vertices) out.vertices->translations.setZero();
  return out;
}

}  // namespace specinit
