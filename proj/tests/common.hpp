#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>

#include "multiscope/experiment.hpp"
#include "multiscope/multiscope.hpp"
#include "multiscope/report.hpp"

namespace mst {

using namespace multiscope;

inline SegmentationParams seg_params(const std::string& name) {
  SegmentationParams p;
  if (name == "wrench") p.n_clusters = 10;
  if (name == "hexkey" || name == "pawl") p.n_clusters = 7;
  if (name == "cube") p.n_clusters = 6;
  return p;
}

/// Object models at the default density, built once per process.
inline const ObjectModel& model(const std::string& name) {
  static std::map<std::string, std::shared_ptr<const ObjectModel>> cache;
  static std::mutex mu;
  std::lock_guard lock(mu);
  auto& slot = cache[name];
  if (!slot) slot = make_object_model(name, make_tool_mesh(name), 1e6, seg_params(name), name == "probe" ? 12 : 11);
  return *slot;
}

/// Cost the contact filter minimises at one surface point.
inline double contact_cost(const Vec3& r, const Vec3& outward, const Wrench& gamma, const SensorNoise& noise,
                           const CpfParams& p) {
  const ForceSolve s = solve_contact_force(r, gamma, noise);
  return s.nll + direction_penalty(s.force, outward, p.lambda_dir) + friction_penalty(s.force, outward, p.mu, p.lambda_friction);
}

/// Exhaustive minimum of contact_cost over a dense resampling of the mesh
/// (object frame, identity pose).
inline Vec3 brute_force_contact(const TriMesh& mesh, const Wrench& gamma, const SensorNoise& noise,
                                const CpfParams& p, double density, std::uint64_t seed = 99) {
  const SurfacePointSet dense = sample_surface(mesh, density, seed);
  double best = std::numeric_limits<double>::infinity();
  Vec3 arg = Vec3::Zero();
  for (std::size_t i = 0; i < dense.size(); ++i) {
    const double c = contact_cost(dense.points[i], dense.normals[i], gamma, noise, p);
    if (c < best) {
      best = c;
      arg = dense.points[i];
    }
  }
  return arg;
}

inline double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

/// Point-triangle distance by plane projection plus edge fallback.
inline double triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a).normalized();
  const Vec3 q = p - n.dot(p - a) * n;
  const bool inside = n.dot((b - a).cross(q - a)) >= 0 && n.dot((c - b).cross(q - b)) >= 0 &&
                      n.dot((a - c).cross(q - c)) >= 0;
  if (inside) return std::abs(n.dot(p - a));
  return std::min({segment_distance(p, a, b), segment_distance(p, b, c), segment_distance(p, c, a)});
}

inline double brute_distance(const TriMesh& m, const Vec3& p) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < m.size(); ++t) d = std::min(d, triangle_distance(p, m.corner(t, 0), m.corner(t, 1), m.corner(t, 2)));
  return d;
}

/// Inside test by counting crossings of a fixed oblique ray.
inline bool ray_inside(const TriMesh& m, const Vec3& p) {
  const Vec3 dir = Vec3(0.5773, 0.5774, 0.5775).normalized();
  int hits = 0;
  for (std::size_t t = 0; t < m.size(); ++t) {
    const Vec3 &a = m.corner(t, 0), &b = m.corner(t, 1), &c = m.corner(t, 2);
    const Vec3 e1 = b - a, e2 = c - a;
    const Vec3 h = dir.cross(e2);
    const double det = e1.dot(h);
    if (std::abs(det) < 1e-15) continue;
    const Vec3 s = p - a;
    const double u = s.dot(h) / det;
    if (u < 0 || u > 1) continue;
    const Vec3 q = s.cross(e1);
    const double v = dir.dot(q) / det;
    if (v < 0 || u + v > 1) continue;
    if (e2.dot(q) / det > 0) ++hits;
  }
  return hits % 2 == 1;
}

inline RunConfig config(const std::string& name) {
  return load_config(std::string(MULTISCOPE_SOURCE_DIR) + "/configs/" + name + ".cfg");
}

/// Tool and probe models of a bundled config, built once per process.
inline const Objects& objects(const std::string& cfg) {
  static std::map<std::string, Objects> cache;
  static std::mutex mu;
  std::lock_guard lock(mu);
  auto it = cache.find(cfg);
  if (it == cache.end()) it = cache.emplace(cfg, load_objects(config(cfg))).first;
  return it->second;
}

inline TriMesh cube_text_mesh() {
  std::istringstream in(
      "OFF\n8 12 0\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n0 0 1\n1 0 1\n0 1 1\n1 1 1\n"
      "3 0 2 3\n3 0 3 1\n3 4 5 7\n3 4 7 6\n3 0 1 5\n3 0 5 4\n3 2 6 7\n3 2 7 3\n3 0 4 6\n3 0 6 2\n3 1 3 7\n3 1 7 5\n");
  return parse_off(in);
}

}  // namespace mst
