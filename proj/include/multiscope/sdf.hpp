#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include "multiscope/geometry.hpp"

namespace multiscope {

/// Which feature of a triangle holds the closest point.
enum class TriangleFeature { kFace, kEdge01, kEdge12, kEdge20, kVertex0, kVertex1, kVertex2 };

struct ClosestPoint {
  Vec3 point;
  TriangleFeature feature;
};

/// Closest point on triangle (a, b, c) to p (Ericson, Real-Time Collision
/// Detection, 5.1.5), also reporting the Voronoi feature it lies in.
inline ClosestPoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return {a, TriangleFeature::kVertex0};

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return {b, TriangleFeature::kVertex1};

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return {a + v * ab, TriangleFeature::kEdge01};
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return {c, TriangleFeature::kVertex2};

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return {a + w * ac, TriangleFeature::kEdge20};
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return {b + w * (c - b), TriangleFeature::kEdge12};
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return {a + ab * v + ac * w, TriangleFeature::kFace};
}

/// Exact signed distance to a watertight mesh: nearest triangle through an
/// AABB tree, sign from angle-weighted pseudonormals (Baerentzen & Aanaes).
class MeshSdf {
 public:
  MeshSdf() = default;

  explicit MeshSdf(TriMesh mesh) : mesh_(std::move(mesh)) {
    build_pseudonormals();
    build_tree();
  }

  const TriMesh& mesh() const { return mesh_; }

  double signed_distance(const Vec3& p) const {
    double best_d2 = std::numeric_limits<double>::infinity();
    int best_tri = -1;
    ClosestPoint best{};
    nearest(p, best_d2, best_tri, best);
    const Vec3 n = pseudonormal(best_tri, best.feature);
    const double d = std::sqrt(best_d2);
    return (p - best.point).dot(n) < 0.0 ? -d : d;
  }

  /// Unsigned distance with the nearest surface point.
  double distance(const Vec3& p, Vec3* closest = nullptr) const {
    double best_d2 = std::numeric_limits<double>::infinity();
    int best_tri = -1;
    ClosestPoint best{};
    nearest(p, best_d2, best_tri, best);
    if (closest) *closest = best.point;
    return std::sqrt(best_d2);
  }

 private:
  struct Node {
    Aabb box;
    int left = -1;   // child index, or -1 for a leaf
    int right = -1;
    int begin = 0;   // range into order_ for leaves
    int end = 0;
  };

  static constexpr int kLeafSize = 4;

  void build_pseudonormals() {
    const auto& tris = mesh_.triangles();
    vertex_normal_.assign(mesh_.vertices().size(), Vec3::Zero());
    std::map<std::pair<int, int>, Vec3> edge_sum;
    for (std::size_t t = 0; t < tris.size(); ++t) {
      const Vec3& n = mesh_.normals()[t];
      for (int k = 0; k < 3; ++k) {
        const int i0 = tris[t][k];
        const int i1 = tris[t][(k + 1) % 3];
        const int i2 = tris[t][(k + 2) % 3];
        const Vec3 e1 = (mesh_.vertices()[i1] - mesh_.vertices()[i0]).normalized();
        const Vec3 e2 = (mesh_.vertices()[i2] - mesh_.vertices()[i0]).normalized();
        const double angle = std::acos(std::clamp(e1.dot(e2), -1.0, 1.0));
        vertex_normal_[i0] += angle * n;
        edge_sum.try_emplace({std::min(i0, i1), std::max(i0, i1)}, Vec3::Zero()).first->second += n;
      }
    }
    edge_normal_.resize(tris.size());
    for (std::size_t t = 0; t < tris.size(); ++t) {
      for (int k = 0; k < 3; ++k) {
        const int i0 = tris[t][k];
        const int i1 = tris[t][(k + 1) % 3];
        edge_normal_[t][k] = edge_sum.at({std::min(i0, i1), std::max(i0, i1)});
      }
    }
  }

  Vec3 pseudonormal(int tri, TriangleFeature f) const {
    const Triangle& t = mesh_.triangles()[tri];
    switch (f) {
      case TriangleFeature::kFace: return mesh_.normals()[tri];
      case TriangleFeature::kEdge01: return edge_normal_[tri][0];
      case TriangleFeature::kEdge12: return edge_normal_[tri][1];
      case TriangleFeature::kEdge20: return edge_normal_[tri][2];
      case TriangleFeature::kVertex0: return vertex_normal_[t[0]];
      case TriangleFeature::kVertex1: return vertex_normal_[t[1]];
      case TriangleFeature::kVertex2: return vertex_normal_[t[2]];
    }
    return mesh_.normals()[tri];
  }

  void build_tree() {
    const std::size_t n = mesh_.size();
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    centroid_.resize(n);
    tri_box_.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      centroid_[t] = (mesh_.corner(t, 0) + mesh_.corner(t, 1) + mesh_.corner(t, 2)) / 3.0;
      for (int k = 0; k < 3; ++k) tri_box_[t].extend(mesh_.corner(t, k));
    }
    nodes_.reserve(2 * n / kLeafSize + 2);
    build_node(0, static_cast<int>(n));
  }

  int build_node(int begin, int end) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Aabb box;
    Aabb centers;
    for (int i = begin; i < end; ++i) {
      box.extend(tri_box_[order_[i]]);
      centers.extend(centroid_[order_[i]]);
    }
    nodes_[index].box = box;
    if (end - begin <= kLeafSize) {
      nodes_[index].begin = begin;
      nodes_[index].end = end;
      return index;
    }
    int axis = 0;
    (centers.hi - centers.lo).maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) { return centroid_[a][axis] < centroid_[b][axis]; });
    const int left = build_node(begin, mid);
    const int right = build_node(mid, end);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
  }

  void nearest(const Vec3& p, double& best_d2, int& best_tri, ClosestPoint& best) const {
    int stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (node.box.squared_distance(p) >= best_d2) continue;
      if (node.left < 0) {
        for (int i = node.begin; i < node.end; ++i) {
          const int t = order_[i];
          const ClosestPoint cp = closest_point_on_triangle(p, mesh_.corner(t, 0), mesh_.corner(t, 1), mesh_.corner(t, 2));
          const double d2 = (cp.point - p).squaredNorm();
          if (d2 < best_d2) {
            best_d2 = d2;
            best_tri = t;
            best = cp;
          }
        }
        continue;
      }
      const double dl = nodes_[node.left].box.squared_distance(p);
      const double dr = nodes_[node.right].box.squared_distance(p);
      // Push the farther child first so the nearer one is searched first.
      if (dl < dr) {
        stack[top++] = node.right;
        stack[top++] = node.left;
      } else {
        stack[top++] = node.left;
        stack[top++] = node.right;
      }
    }
  }

  TriMesh mesh_;
  std::vector<Vec3> vertex_normal_;
  std::vector<std::array<Vec3, 3>> edge_normal_;
  std::vector<Node> nodes_;
  std::vector<int> order_;
  std::vector<Vec3> centroid_;
  std::vector<Aabb> tri_box_;
};

inline double signed_distance(const MeshSdf& sdf, const Vec3& p) { return sdf.signed_distance(p); }

/// Default interpenetration margin (m): a sample counts as penetrating only if
/// it lies deeper than this inside the other solid.
inline constexpr double kDefaultPenetrationMargin = 1e-3;

/// Number of `points` (pose `world_from_points`) lying deeper than `margin`
/// inside the solid `solid` (pose `world_from_solid`).
inline int count_inside(const SurfacePointSet& points, const Transform& world_from_points, const MeshSdf& solid,
                        const Transform& world_from_solid, double margin) {
  const Transform solid_from_points = world_from_solid.inverse(Eigen::Isometry) * world_from_points;
  const Aabb& box = solid.mesh().bounds();
  int count = 0;
  for (const Vec3& p : points.points) {
    const Vec3 q = solid_from_points * p;
    if (!box.contains(q, -margin)) continue;
    if (solid.signed_distance(q) < -margin) ++count;
  }
  return count;
}

/// N_pp for a pair of posed objects. The symmetric form adds probe samples
/// inside the tool to tool samples inside the probe.
inline int penetration_count(const SurfacePointSet& tool_points, const MeshSdf& tool, const Transform& world_from_tool,
                             const SurfacePointSet& probe_points, const MeshSdf& probe,
                             const Transform& world_from_probe, double margin = kDefaultPenetrationMargin,
                             bool symmetric = true) {
  int n = count_inside(tool_points, world_from_tool, probe, world_from_probe, margin);
  if (symmetric) n += count_inside(probe_points, world_from_probe, tool, world_from_tool, margin);
  return n;
}

/// Both poses expressed in one common end-effector frame.
inline int penetration_count(const SurfacePointSet& tool_points, const MeshSdf& tool, const Pose2& pose_t,
                             const SurfacePointSet& probe_points, const MeshSdf& probe, const Pose2& pose_p,
                             double margin = kDefaultPenetrationMargin, bool symmetric = true) {
  return penetration_count(tool_points, tool, pose_t.to_transform(), probe_points, probe, pose_p.to_transform(),
                           margin, symmetric);
}

}  // namespace multiscope
