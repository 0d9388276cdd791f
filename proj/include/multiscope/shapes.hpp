#pragma once

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "multiscope/geometry.hpp"

namespace multiscope::shapes {

using Vec2 = Eigen::Vector2d;  // (x, z) outline coordinates

namespace detail {

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline double polygon_area(const std::vector<Vec2>& p) {
  double a = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) a += cross2(p[i], p[(i + 1) % p.size()]);
  return 0.5 * a;
}

inline bool inside_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  return cross2(b - a, p - a) >= 0.0 && cross2(c - b, p - b) >= 0.0 && cross2(a - c, p - c) >= 0.0;
}

// Flips triangles if needed so the mesh winds outward.
inline TriMesh oriented(std::vector<Vec3> v, std::vector<Triangle> t) {
  TriMesh m(v, t);
  if (m.signed_volume() < 0.0) {
    for (Triangle& tri : t) std::swap(tri[1], tri[2]);
    return TriMesh(std::move(v), std::move(t));
  }
  return m;
}

}  // namespace detail

/// Ear-clipping triangulation of a simple polygon given counter-clockwise in
/// its own 2-D coordinates. Collinear corners are rejected.
inline std::vector<std::array<int, 3>> triangulate(const std::vector<Vec2>& poly) {
  if (poly.size() < 3) throw std::invalid_argument("triangulate: fewer than three corners");
  if (detail::polygon_area(poly) <= 0.0) throw std::invalid_argument("triangulate: polygon must be CCW");
  std::vector<int> ring(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) ring[i] = static_cast<int>(i);
  std::vector<std::array<int, 3>> out;
  while (ring.size() > 3) {
    bool clipped = false;
    for (std::size_t k = 0; k < ring.size(); ++k) {
      const int ia = ring[(k + ring.size() - 1) % ring.size()];
      const int ib = ring[k];
      const int ic = ring[(k + 1) % ring.size()];
      const Vec2 &a = poly[ia], &b = poly[ib], &c = poly[ic];
      const double turn = detail::cross2(b - a, c - b);
      if (std::abs(turn) < 1e-18) throw std::invalid_argument("triangulate: collinear corner");
      if (turn < 0.0) continue;  // reflex
      bool blocked = false;
      for (int q : ring) {
        if (q == ia || q == ib || q == ic) continue;
        if (detail::inside_triangle(poly[q], a, b, c)) {
          blocked = true;
          break;
        }
      }
      if (blocked) continue;
      out.push_back({ia, ib, ic});
      ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(k));
      clipped = true;
      break;
    }
    if (!clipped) throw std::invalid_argument("triangulate: polygon is not simple");
  }
  out.push_back({ring[0], ring[1], ring[2]});
  return out;
}

/// Prism from an (x, z) outline extruded symmetrically along y.
inline TriMesh extrude(const std::vector<Vec2>& outline, double thickness) {
  const int n = static_cast<int>(outline.size());
  std::vector<Vec3> v;
  v.reserve(2 * outline.size());
  for (const Vec2& p : outline) v.emplace_back(p.x(), -0.5 * thickness, p.y());
  for (const Vec2& p : outline) v.emplace_back(p.x(), 0.5 * thickness, p.y());
  std::vector<Triangle> t;
  for (const auto& tri : triangulate(outline)) {
    t.push_back({tri[0], tri[1], tri[2]});
    t.push_back({n + tri[0], n + tri[2], n + tri[1]});
  }
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    t.push_back({i, n + j, j});
    t.push_back({i, n + i, n + j});
  }
  return detail::oriented(std::move(v), std::move(t));
}

/// Solid of revolution about +z from a profile of (radius, z) points running
/// from one pole (radius 0) to the other.
inline TriMesh revolve(const std::vector<Vec2>& profile, int segments) {
  if (profile.size() < 3 || profile.front().x() != 0.0 || profile.back().x() != 0.0) {
    throw std::invalid_argument("revolve: profile must start and end on the axis");
  }
  std::vector<Vec3> v;
  std::vector<int> ring_start;
  for (std::size_t k = 0; k < profile.size(); ++k) {
    const double r = profile[k].x();
    const double z = profile[k].y();
    ring_start.push_back(static_cast<int>(v.size()));
    if (r == 0.0) {
      v.emplace_back(0.0, 0.0, z);
      continue;
    }
    for (int s = 0; s < segments; ++s) {
      const double a = 2.0 * std::numbers::pi * s / segments;
      v.emplace_back(r * std::cos(a), r * std::sin(a), z);
    }
  }
  std::vector<Triangle> t;
  for (std::size_t k = 0; k + 1 < profile.size(); ++k) {
    const bool pole0 = profile[k].x() == 0.0;
    const bool pole1 = profile[k + 1].x() == 0.0;
    const int a0 = ring_start[k];
    const int b0 = ring_start[k + 1];
    for (int s = 0; s < segments; ++s) {
      const int s1 = (s + 1) % segments;
      if (pole0 && pole1) throw std::invalid_argument("revolve: consecutive poles");
      if (pole0) {
        t.push_back({a0, b0 + s1, b0 + s});
      } else if (pole1) {
        t.push_back({a0 + s, a0 + s1, b0});
      } else {
        t.push_back({a0 + s, a0 + s1, b0 + s1});
        t.push_back({a0 + s, b0 + s1, b0 + s});
      }
    }
  }
  return detail::oriented(std::move(v), std::move(t));
}

/// Axis-aligned box with corners lo and hi.
inline TriMesh box(const Vec3& lo, const Vec3& hi) {
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i) {
    v.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(), (i & 4) ? hi.z() : lo.z());
  }
  std::vector<Triangle> t = {
      {0, 2, 3}, {0, 3, 1},  // z = lo
      {4, 5, 7}, {4, 7, 6},  // z = hi
      {0, 1, 5}, {0, 5, 4},  // y = lo
      {2, 6, 7}, {2, 7, 3},  // y = hi
      {0, 4, 6}, {0, 6, 2},  // x = lo
      {1, 3, 7}, {1, 7, 5},  // x = hi
  };
  return detail::oriented(std::move(v), std::move(t));
}

inline TriMesh unit_cube() { return box(Vec3::Zero(), Vec3::Ones()); }

/// Subdivided icosahedron with vertices on a sphere.
inline TriMesh icosphere(double radius, int subdivisions) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0}, {0, -1, phi}, {0, 1, phi},
                         {0, -1, -phi}, {0, 1, -phi}, {phi, 0, -1},  {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  for (Vec3& p : v) p.normalize();
  std::vector<Triangle> t = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
                             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
                             {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::make_pair(std::min(a, b), std::max(a, b));
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int idx = static_cast<int>(v.size()) - 1;
      mid.emplace(key, idx);
      return idx;
    };
    std::vector<Triangle> next;
    next.reserve(4 * t.size());
    for (const Triangle& tri : t) {
      const int ab = midpoint(tri[0], tri[1]);
      const int bc = midpoint(tri[1], tri[2]);
      const int ca = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    t = std::move(next);
  }
  for (Vec3& p : v) p *= radius;
  return detail::oriented(std::move(v), std::move(t));
}

}  // namespace multiscope::shapes
