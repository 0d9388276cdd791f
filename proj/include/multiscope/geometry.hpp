#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace multiscope {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Transform = Eigen::Isometry3d;

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  a = std::remainder(a, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  return a;
}

/// Planar offset of a grasped object from its nominal grasp, expressed in the
/// end-effector frame. The plane is the end-effector X-Z plane; rotation is
/// about the end-effector Y axis (the gripper closing axis).
struct Pose2 {
  double x = 0.0;      // m
  double z = 0.0;      // m
  double theta = 0.0;  // rad

  Pose2() = default;
  Pose2(double x_, double z_, double theta_) : x(x_), z(z_), theta(wrap_angle(theta_)) {}

  /// Transform taking object-frame coordinates to end-effector coordinates.
  Transform to_transform() const {
    Transform t = Transform::Identity();
    t.linear() = Eigen::AngleAxisd(theta, Vec3::UnitY()).toRotationMatrix();
    t.translation() = Vec3(x, 0.0, z);
    return t;
  }

  /// Inverse of to_transform. Out-of-plane components are dropped.
  static Pose2 from_transform(const Transform& t) {
    const Mat3& r = t.linear();
    return Pose2(t.translation().x(), t.translation().z(), std::atan2(r(0, 2), r(0, 0)));
  }

  bool operator==(const Pose2&) const = default;
};

struct MeshError : std::runtime_error {
  enum class Kind { kParse, kDegenerate, kNotWatertight };
  MeshError(Kind k, const std::string& what) : std::runtime_error(what), kind(k) {}
  Kind kind;
};

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool contains(const Vec3& p, double pad = 0.0) const {
    return (p.array() >= lo.array() - pad).all() && (p.array() <= hi.array() + pad).all();
  }
  double squared_distance(const Vec3& p) const {
    const Vec3 d = (lo - p).cwiseMax(Vec3::Zero()).cwiseMax(p - hi);
    return d.squaredNorm();
  }
  Vec3 center() const { return 0.5 * (lo + hi); }
};

using Triangle = std::array<int, 3>;

/// Immutable triangle mesh with per-triangle unit normals from the winding
/// order (counter-clockwise seen from outside).
class TriMesh {
 public:
  TriMesh() = default;

  TriMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles,
          bool require_watertight = true)
      : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
    const int nv = static_cast<int>(vertices_.size());
    normals_.reserve(triangles_.size());
    areas_.reserve(triangles_.size());
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
      const Triangle& tri = triangles_[t];
      for (int k = 0; k < 3; ++k) {
        if (tri[k] < 0 || tri[k] >= nv) {
          throw MeshError(MeshError::Kind::kParse,
                          "triangle " + std::to_string(t) + " references a missing vertex");
        }
      }
      if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
        throw MeshError(MeshError::Kind::kDegenerate,
                        "triangle " + std::to_string(t) + " repeats a vertex");
      }
      const Vec3 c = (vertices_[tri[1]] - vertices_[tri[0]]).cross(vertices_[tri[2]] - vertices_[tri[0]]);
      const double n = c.norm();
      if (!(n > 1e-20)) {
        throw MeshError(MeshError::Kind::kDegenerate,
                        "triangle " + std::to_string(t) + " has zero area");
      }
      normals_.push_back(c / n);
      areas_.push_back(0.5 * n);
      area_ += 0.5 * n;
    }
    for (const Vec3& v : vertices_) bounds_.extend(v);
    if (require_watertight) check_watertight();
  }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Vec3>& normals() const { return normals_; }
  const std::vector<double>& areas() const { return areas_; }
  double surface_area() const { return area_; }
  const Aabb& bounds() const { return bounds_; }
  std::size_t size() const { return triangles_.size(); }

  const Vec3& corner(std::size_t t, int k) const { return vertices_[triangles_[t][k]]; }

  /// Divergence-theorem volume; positive for outward winding.
  double signed_volume() const {
    double v = 0.0;
    for (const Triangle& t : triangles_) {
      v += vertices_[t[0]].dot(vertices_[t[1]].cross(vertices_[t[2]]));
    }
    return v / 6.0;
  }

 private:
  // Every directed edge must appear once and its reverse once; that gives a
  // closed, consistently oriented 2-manifold edge structure.
  void check_watertight() const {
    std::map<std::pair<int, int>, int> directed;
    for (const Triangle& t : triangles_) {
      for (int k = 0; k < 3; ++k) {
        ++directed[{t[k], t[(k + 1) % 3]}];
      }
    }
    for (const auto& [edge, count] : directed) {
      if (count != 1) {
        throw MeshError(MeshError::Kind::kNotWatertight,
                        "edge (" + std::to_string(edge.first) + "," + std::to_string(edge.second) +
                            ") is shared by more than two triangles or inconsistently wound");
      }
      if (!directed.contains({edge.second, edge.first})) {
        throw MeshError(MeshError::Kind::kNotWatertight,
                        "edge (" + std::to_string(edge.first) + "," + std::to_string(edge.second) +
                            ") is a boundary edge");
      }
    }
  }

  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Vec3> normals_;
  std::vector<double> areas_;
  double area_ = 0.0;
  Aabb bounds_;
};

namespace detail {

inline bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

}  // namespace detail

/// Parses an ASCII OFF stream. Polygons with more than three corners are
/// fan-triangulated.
inline TriMesh parse_off(std::istream& in, bool require_watertight = true) {
  std::string line;
  if (!detail::next_data_line(in, line)) throw MeshError(MeshError::Kind::kParse, "empty OFF input");
  std::istringstream header(line);
  std::string magic;
  header >> magic;
  if (magic != "OFF") throw MeshError(MeshError::Kind::kParse, "missing OFF header");
  long nv = -1, nf = -1, ne = 0;
  if (!(header >> nv)) {
    if (!detail::next_data_line(in, line)) throw MeshError(MeshError::Kind::kParse, "missing OFF counts");
    std::istringstream counts(line);
    counts >> nv >> nf >> ne;
  } else {
    header >> nf >> ne;
  }
  if (nv < 3 || nf < 1) throw MeshError(MeshError::Kind::kParse, "bad OFF counts");

  std::vector<Vec3> vertices;
  vertices.reserve(static_cast<std::size_t>(nv));
  for (long i = 0; i < nv; ++i) {
    if (!detail::next_data_line(in, line)) throw MeshError(MeshError::Kind::kParse, "truncated vertex list");
    std::istringstream ls(line);
    Vec3 v;
    if (!(ls >> v.x() >> v.y() >> v.z())) {
      throw MeshError(MeshError::Kind::kParse, "bad vertex line: " + line);
    }
    vertices.push_back(v);
  }
  std::vector<Triangle> triangles;
  triangles.reserve(static_cast<std::size_t>(nf));
  for (long i = 0; i < nf; ++i) {
    if (!detail::next_data_line(in, line)) throw MeshError(MeshError::Kind::kParse, "truncated face list");
    std::istringstream ls(line);
    int n = 0;
    if (!(ls >> n) || n < 3) throw MeshError(MeshError::Kind::kParse, "bad face line: " + line);
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int& k : idx) {
      if (!(ls >> k)) throw MeshError(MeshError::Kind::kParse, "bad face line: " + line);
    }
    for (int k = 1; k + 1 < n; ++k) triangles.push_back({idx[0], idx[k], idx[k + 1]});
  }
  return TriMesh(std::move(vertices), std::move(triangles), require_watertight);
}

inline TriMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError(MeshError::Kind::kParse, "cannot open mesh file " + path);
  return parse_off(in);
}

inline void write_off(std::ostream& out, const TriMesh& mesh) {
  out << "OFF\n" << mesh.vertices().size() << ' ' << mesh.triangles().size() << " 0\n";
  char buf[96];
  for (const Vec3& v : mesh.vertices()) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out << buf;
  }
  for (const Triangle& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

inline void save_mesh(const std::string& path, const TriMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write mesh file " + path);
  write_off(out, mesh);
}

/// Area-uniform samples on a mesh surface, in the object frame.
struct SurfacePointSet {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<int> triangle;
  std::vector<double> area_weight;  // m^2 per point

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  /// Mean distance between neighbouring samples for this density.
  double spacing() const {
    double total = 0.0;
    for (double w : area_weight) total += w;
    return points.empty() ? 0.0 : std::sqrt(total / static_cast<double>(points.size()));
  }
};

/// Uniform point inside triangle (a, b, c) from two unit variates.
inline Vec3 triangle_point(const Vec3& a, const Vec3& b, const Vec3& c, double u, double v) {
  const double su = std::sqrt(u);
  return (1.0 - su) * a + su * (1.0 - v) * b + su * v * c;
}

/// Stratified per-triangle sampling: each triangle receives floor(density * area)
/// points plus one more with probability equal to the fractional remainder.
/// Every point carries the same area weight, so the weights sum to the mesh area.
inline SurfacePointSet sample_surface(const TriMesh& mesh, double density, std::uint64_t seed = 0) {
  if (!(density > 0.0)) throw std::invalid_argument("sample density must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SurfacePointSet out;
  for (std::size_t t = 0; t < mesh.size(); ++t) {
    const double expected = density * mesh.areas()[t];
    int n = static_cast<int>(std::floor(expected));
    if (unit(rng) < expected - n) ++n;
    for (int k = 0; k < n; ++k) {
      const double u = unit(rng);
      const double v = unit(rng);
      out.points.push_back(triangle_point(mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2), u, v));
      out.normals.push_back(mesh.normals()[t]);
      out.triangle.push_back(static_cast<int>(t));
    }
  }
  const double w = out.points.empty() ? 0.0 : mesh.surface_area() / static_cast<double>(out.points.size());
  out.area_weight.assign(out.points.size(), w);
  return out;
}

}  // namespace multiscope
