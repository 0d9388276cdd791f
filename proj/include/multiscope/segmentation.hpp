#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "multiscope/geometry.hpp"

namespace multiscope {

struct SegmentationParams {
  int n_clusters = 12;     // K-Means k over unique normals
  double epsilon = 3e-3;   // DBSCAN neighbourhood radius, m
  int n_min = 5;           // DBSCAN minimum samples (including the point itself)
  int n_face = 3;          // contact particles per face at initialization
  std::uint64_t seed = 7;  // K-Means seeding

  void validate() const {
    if (n_clusters < 1 || !(epsilon > 0.0) || n_min < 1 || n_face < 1) {
      throw std::invalid_argument("invalid segmentation parameters");
    }
  }
};

struct FaceSet {
  std::vector<std::vector<int>> faces;  // point indices per face
  std::vector<Vec3> mean_normal;
  std::vector<Vec3> centroid;
  std::vector<int> noise;               // DBSCAN noise, excluded from faces
  std::vector<int> face_of;             // per point: face id or -1
  int clusters_used = 0;                // k actually used by K-Means

  std::size_t size() const { return faces.size(); }
  bool empty() const { return faces.empty(); }
};

/// Normals with duplicates removed after quantizing each component to
/// `tolerance`. Output is sorted lexicographically, so it does not depend on
/// the input order.
inline std::vector<Vec3> get_unique_normals(const std::vector<Vec3>& normals, double tolerance = 1e-6) {
  if (normals.empty()) throw std::invalid_argument("no normals to deduplicate");
  std::set<std::tuple<long long, long long, long long>> seen;
  std::vector<Vec3> out;
  for (const Vec3& n : normals) {
    const auto key = std::make_tuple(std::llround(n.x() / tolerance), std::llround(n.y() / tolerance),
                                     std::llround(n.z() / tolerance));
    if (seen.insert(key).second) out.push_back(n);
  }
  std::sort(out.begin(), out.end(), [](const Vec3& a, const Vec3& b) {
    return std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z());
  });
  return out;
}

inline std::vector<Vec3> get_unique_normals(const SurfacePointSet& points, double tolerance = 1e-6) {
  return get_unique_normals(points.normals, tolerance);
}

namespace detail {

inline int nearest_centroid(const Vec3& p, const std::vector<Vec3>& centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = (p - centroids[c]).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

}  // namespace detail

/// Lloyd's K-Means with k-means++ seeding. An emptied cluster is re-seeded at
/// the point farthest from its assigned centroid.
inline std::vector<Vec3> kmeans(const std::vector<Vec3>& data, int k, std::uint64_t seed, int max_iter = 100,
                                double tol = 1e-8) {
  if (k < 1 || static_cast<std::size_t>(k) > data.size()) throw std::invalid_argument("kmeans: bad k");
  std::mt19937_64 rng(seed);
  std::vector<Vec3> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  centroids.push_back(data[std::uniform_int_distribution<std::size_t>(0, data.size() - 1)(rng)]);
  std::vector<double> d2(data.size());
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      d2[i] = (data[i] - centroids[detail::nearest_centroid(data[i], centroids)]).squaredNorm();
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick + 1 < data.size(); ++pick) {
        if (d2[pick] > 0.0 && u < d2[pick]) break;
        u -= d2[pick];
      }
      // Guard against landing on an existing centroid through round-off.
      if (d2[pick] == 0.0) pick = static_cast<std::size_t>(std::max_element(d2.begin(), d2.end()) - d2.begin());
    }
    centroids.push_back(data[pick]);
  }

  std::vector<int> label(data.size(), 0);
  for (int iter = 0; iter < max_iter; ++iter) {
    for (std::size_t i = 0; i < data.size(); ++i) label[i] = detail::nearest_centroid(data[i], centroids);
    std::vector<Vec3> sum(static_cast<std::size_t>(k), Vec3::Zero());
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      sum[label[i]] += data[i];
      ++count[label[i]];
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      Vec3 next;
      if (count[c] > 0) {
        next = sum[c] / count[c];
      } else {
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
          const double d = (data[i] - centroids[label[i]]).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        next = data[far];
      }
      shift = std::max(shift, (next - centroids[c]).norm());
      centroids[c] = next;
    }
    if (shift < tol) break;
  }
  return centroids;
}

/// DBSCAN over positions. Returns a label per point: cluster id, or -1 for
/// noise. Clusters that end with fewer than `n_min` members are relabelled
/// noise.
inline std::vector<int> dbscan(const std::vector<Vec3>& pts, double eps, int n_min) {
  constexpr int kUnvisited = -2;
  constexpr int kNoise = -1;
  const double eps2 = eps * eps;
  const std::size_t n = pts.size();
  std::vector<int> label(n, kUnvisited);

  auto region = [&](std::size_t i) {
    std::vector<int> out;
    for (std::size_t j = 0; j < n; ++j) {
      if ((pts[i] - pts[j]).squaredNorm() <= eps2) out.push_back(static_cast<int>(j));
    }
    return out;
  };

  int cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] != kUnvisited) continue;
    std::vector<int> neighbours = region(i);
    if (static_cast<int>(neighbours.size()) < n_min) {
      label[i] = kNoise;
      continue;
    }
    label[i] = cluster;
    std::deque<int> seeds(neighbours.begin(), neighbours.end());
    while (!seeds.empty()) {
      const int j = seeds.front();
      seeds.pop_front();
      if (label[j] == kNoise) label[j] = cluster;  // border point
      if (label[j] != kUnvisited) continue;
      label[j] = cluster;
      std::vector<int> more = region(static_cast<std::size_t>(j));
      if (static_cast<int>(more.size()) >= n_min) seeds.insert(seeds.end(), more.begin(), more.end());
    }
    ++cluster;
  }

  std::vector<int> size(static_cast<std::size_t>(cluster), 0);
  for (int l : label) {
    if (l >= 0) ++size[l];
  }
  std::vector<int> remap(static_cast<std::size_t>(cluster), -1);
  int kept = 0;
  for (int c = 0; c < cluster; ++c) {
    if (size[c] >= n_min) remap[c] = kept++;
  }
  for (int& l : label) l = l >= 0 ? remap[l] : kNoise;
  return label;
}

/// Splits a sampled surface into faces: K-Means over the unique normals,
/// every sample grouped by the centroid nearest its normal, then DBSCAN
/// inside each normal group to separate spatially distant patches.
inline FaceSet segment_tool(const SurfacePointSet& points, SegmentationParams params) {
  params.validate();
  if (points.size() < static_cast<std::size_t>(params.n_clusters)) {
    throw std::invalid_argument("segment_tool: fewer points than clusters");
  }
  const std::vector<Vec3> unique = get_unique_normals(points);
  int k = params.n_clusters;
  if (static_cast<std::size_t>(k) > unique.size()) {
    std::cerr << "segment_tool: only " << unique.size() << " unique normals, reducing k from " << k << '\n';
    k = static_cast<int>(unique.size());
  }
  const std::vector<Vec3> centroids = kmeans(unique, k, params.seed);

  std::vector<std::vector<int>> groups(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < points.size(); ++i) {
    groups[detail::nearest_centroid(points.normals[i], centroids)].push_back(static_cast<int>(i));
  }

  FaceSet out;
  out.clusters_used = k;
  out.face_of.assign(points.size(), -1);
  for (const std::vector<int>& group : groups) {
    if (group.empty()) continue;
    std::vector<Vec3> pos;
    pos.reserve(group.size());
    for (int i : group) pos.push_back(points.points[i]);
    const std::vector<int> label = dbscan(pos, params.epsilon, params.n_min);
    const int n_clusters = label.empty() ? 0 : *std::max_element(label.begin(), label.end()) + 1;
    const std::size_t first = out.faces.size();
    out.faces.resize(first + static_cast<std::size_t>(n_clusters));
    for (std::size_t j = 0; j < group.size(); ++j) {
      if (label[j] < 0) {
        out.noise.push_back(group[j]);
      } else {
        out.faces[first + label[j]].push_back(group[j]);
      }
    }
  }

  // Canonical face order: by lowest member index, so the labelling does not
  // depend on K-Means cluster numbering.
  for (auto& f : out.faces) std::sort(f.begin(), f.end());
  std::sort(out.faces.begin(), out.faces.end(),
            [&](const std::vector<int>& a, const std::vector<int>& b) {
              const Vec3& pa = points.points[a.front()];
              const Vec3& pb = points.points[b.front()];
              return std::tie(pa.x(), pa.y(), pa.z()) < std::tie(pb.x(), pb.y(), pb.z());
            });
  std::sort(out.noise.begin(), out.noise.end());
  for (std::size_t f = 0; f < out.faces.size(); ++f) {
    Vec3 n = Vec3::Zero();
    Vec3 c = Vec3::Zero();
    for (int i : out.faces[f]) {
      n += points.normals[i];
      c += points.points[i];
      out.face_of[i] = static_cast<int>(f);
    }
    out.mean_normal.push_back(n.normalized());
    out.centroid.push_back(c / static_cast<double>(out.faces[f].size()));
  }
  return out;
}

/// Sample index and the face it was drawn from.
struct ClpSeed {
  int sample;
  int face;
};

/// Face-aware initialization: exactly `n_face` samples from every face,
/// without replacement when the face is large enough and with replacement
/// otherwise.
inline std::vector<ClpSeed> init_clps(const FaceSet& faces, int n_face, std::uint64_t seed) {
  if (faces.empty()) throw std::invalid_argument("init_clps: empty face set");
  if (n_face < 1) throw std::invalid_argument("init_clps: n_face must be positive");
  std::mt19937_64 rng(seed);
  std::vector<ClpSeed> out;
  out.reserve(faces.size() * static_cast<std::size_t>(n_face));
  for (std::size_t f = 0; f < faces.size(); ++f) {
    std::vector<int> members = faces.faces[f];
    const std::size_t m = members.size();
    if (m >= static_cast<std::size_t>(n_face)) {
      for (int j = 0; j < n_face; ++j) {
        const std::size_t pick = std::uniform_int_distribution<std::size_t>(j, m - 1)(rng);
        std::swap(members[j], members[pick]);
        out.push_back({members[j], static_cast<int>(f)});
      }
    } else {
      std::uniform_int_distribution<std::size_t> any(0, m - 1);
      for (int j = 0; j < n_face; ++j) out.push_back({members[any(rng)], static_cast<int>(f)});
    }
  }
  return out;
}

/// Baseline initialization: `n` samples drawn uniformly over all face points,
/// which favours large faces in proportion to their area.
inline std::vector<ClpSeed> init_clps_uniform(const FaceSet& faces, int n, std::uint64_t seed) {
  if (faces.empty()) throw std::invalid_argument("init_clps_uniform: empty face set");
  std::vector<ClpSeed> pool;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int i : faces.faces[f]) pool.push_back({i, static_cast<int>(f)});
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> any(0, pool.size() - 1);
  std::vector<ClpSeed> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) out.push_back(pool[any(rng)]);
  return out;
}

}  // namespace multiscope
