#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "multiscope/geometry.hpp"
#include "multiscope/sdf.hpp"
#include "multiscope/segmentation.hpp"

namespace multiscope {

/// Everything the estimator knows about one grasped object: its geometry,
/// distance field, surface samples, faces, and a same-face neighbour table
/// for contact-particle moves. Built once, then shared read-only.
struct ObjectModel {
  std::string name;
  MeshSdf sdf;
  SurfacePointSet samples;
  FaceSet faces;
  std::vector<std::vector<int>> neighbours;  // k nearest same-face samples
  int n_face = 3;                             // CLPs per face at initialization

  const TriMesh& mesh() const { return sdf.mesh(); }
};

/// For every face member, its `k` nearest other members of the same face.
inline std::vector<std::vector<int>> same_face_neighbours(const SurfacePointSet& samples, const FaceSet& faces,
                                                          int k) {
  std::vector<std::vector<int>> out(samples.size());
  std::vector<std::pair<double, int>> cand;
  for (const std::vector<int>& face : faces.faces) {
    for (int i : face) {
      cand.clear();
      for (int j : face) {
        if (j != i) cand.emplace_back((samples.points[i] - samples.points[j]).squaredNorm(), j);
      }
      const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(k), cand.size());
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(m), cand.end());
      out[i].reserve(m);
      for (std::size_t q = 0; q < m; ++q) out[i].push_back(cand[q].second);
    }
  }
  return out;
}

inline std::shared_ptr<const ObjectModel> make_object_model(std::string name, TriMesh mesh, double density,
                                                            const SegmentationParams& seg,
                                                            std::uint64_t sample_seed, int knn = 8) {
  auto model = std::make_shared<ObjectModel>();
  model->name = std::move(name);
  model->samples = sample_surface(mesh, density, sample_seed);
  model->sdf = MeshSdf(std::move(mesh));
  model->faces = segment_tool(model->samples, seg);
  model->n_face = seg.n_face;
  model->neighbours = same_face_neighbours(model->samples, model->faces, knn);
  return model;
}

}  // namespace multiscope
