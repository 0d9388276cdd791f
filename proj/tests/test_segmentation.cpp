#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "common.hpp"

using namespace mst;

namespace {

const std::vector<std::string> kFlat = {"wrench", "hexkey", "pawl", "gear", "cube"};

SurfacePointSet two_squares() {
  // Two unit squares in the plane z = 0, one metre apart, sharing normal +z.
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {2, 0, 0}, {3, 0, 0}, {3, 1, 0}, {2, 1, 0}};
  std::vector<Triangle> t = {{0, 1, 2}, {0, 2, 3}, {4, 5, 6}, {4, 6, 7}};
  return sample_surface(TriMesh(v, t, false), 2500.0, 2);
}

Vec3 manifest_jaw_centroid() {
  std::ifstream in(std::filesystem::path(MULTISCOPE_ASSET_DIR) / "manifest.json");
  const nlohmann::json j = nlohmann::json::parse(in);
  const auto c = j["wrench_jaw_flat"]["centroid_m"];
  return {c[0].get<double>(), c[1].get<double>(), c[2].get<double>()};
}

TEST(UniqueNormals, CubeHasSix) {
  const SurfacePointSet s = sample_surface(shapes::unit_cube(), 200.0, 1);
  EXPECT_EQ(get_unique_normals(s).size(), 6u);
}

TEST(UniqueNormals, SingleTriangleHasOne) {
  const TriMesh tri({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}}, false);
  EXPECT_EQ(get_unique_normals(sample_surface(tri, 500.0, 1)).size(), 1u);
}

TEST(UniqueNormals, WrenchMatchesHashSetOracle) {
  const SurfacePointSet& s = model("wrench").samples;
  std::unordered_set<std::string> seen;
  for (const Vec3& n : s.normals) {
    char key[96];
    std::snprintf(key, sizeof(key), "%lld/%lld/%lld", std::llround(n.x() * 1e6), std::llround(n.y() * 1e6),
                  std::llround(n.z() * 1e6));
    seen.insert(key);
  }
  EXPECT_EQ(get_unique_normals(s).size(), seen.size());
}

TEST(SegmentTool, UnitCubeSixFaces) {
  const SurfacePointSet s = sample_surface(shapes::unit_cube(), 600.0, 1);
  SegmentationParams p;
  p.n_clusters = 6;
  p.epsilon = 0.1;
  p.n_min = 5;
  const FaceSet f = segment_tool(s, p);
  ASSERT_EQ(f.size(), 6u);
  std::set<int> axes;
  for (const Vec3& n : f.mean_normal) {
    int axis = 0;
    n.cwiseAbs().maxCoeff(&axis);
    axes.insert(axis * 2 + (n[axis] > 0 ? 1 : 0));
  }
  EXPECT_EQ(axes.size(), 6u);
}

TEST(SegmentTool, CoplanarPatchesSplitBySpacing) {
  SegmentationParams p;
  p.n_clusters = 1;
  p.epsilon = 0.1;
  p.n_min = 5;
  EXPECT_EQ(segment_tool(two_squares(), p).size(), 2u);
}

TEST(SegmentTool, WrenchJawFlatIsOwnFace) {
  const ObjectModel& m = model("wrench");
  const Vec3 jaw = manifest_jaw_centroid();
  int found = -1;
  for (std::size_t f = 0; f < m.faces.size(); ++f) {
    if ((m.faces.centroid[f] - jaw).norm() < 5e-3) found = static_cast<int>(f);
  }
  ASSERT_GE(found, 0);
  const auto& members = m.faces.faces[found];
  EXPECT_GE(static_cast<int>(members.size()), seg_params("wrench").n_min);
  for (int i : members) {
    EXPECT_NEAR(m.samples.points[i].x(), -6.35e-3, 1e-9);
    EXPECT_GE(m.samples.points[i].z(), 52e-3 - 1e-9);
  }
  // Every jaw-flat sample landed in this face.
  int on_flat = 0;
  for (std::size_t i = 0; i < m.samples.size(); ++i) {
    const Vec3& p = m.samples.points[i];
    if (std::abs(p.x() + 6.35e-3) < 1e-9 && m.samples.normals[i].x() > 0.5) ++on_flat;
  }
  EXPECT_EQ(on_flat, static_cast<int>(members.size()));
}

TEST(InitClps, CubeSixtyParticlesCoveringEveryFace) {
  const SurfacePointSet s = sample_surface(shapes::unit_cube(), 600.0, 1);
  SegmentationParams p;
  p.n_clusters = 6;
  p.epsilon = 0.1;
  const FaceSet f = segment_tool(s, p);
  const auto clps = init_clps(f, 10, 3);
  EXPECT_EQ(clps.size(), 60u);
  std::vector<int> count(f.size(), 0);
  for (const ClpSeed& c : clps) ++count[f.face_of[c.sample]];
  for (int c : count) EXPECT_GE(c, 1);
}

TEST(InitClps, SmallFaceSamplesWithReplacement) {
  FaceSet f;
  f.faces = {{4, 9, 13}};
  const auto clps = init_clps(f, 10, 1);
  ASSERT_EQ(clps.size(), 10u);
  for (const ClpSeed& c : clps) EXPECT_TRUE(c.sample == 4 || c.sample == 9 || c.sample == 13);
}

TEST(InitClps, WrenchUniformOftenMissesJawFlat) {
  const ObjectModel& m = model("wrench");
  const Vec3 jaw = manifest_jaw_centroid();
  int jaw_face = -1;
  for (std::size_t f = 0; f < m.faces.size(); ++f) {
    if ((m.faces.centroid[f] - jaw).norm() < 5e-3) jaw_face = static_cast<int>(f);
  }
  ASSERT_GE(jaw_face, 0);
  const int n_face = 3;
  const int budget = n_face * static_cast<int>(m.faces.size());
  int empty = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::vector<int> seg(m.faces.size(), 0);
    for (const ClpSeed& c : init_clps(m.faces, n_face, seed)) ++seg[c.face];
    for (int c : seg) EXPECT_EQ(c, n_face);
    bool hit = false;
    for (const ClpSeed& c : init_clps_uniform(m.faces, budget, seed)) hit = hit || c.face == jaw_face;
    empty += hit ? 0 : 1;
  }
  EXPECT_GE(empty, 20);
}

// Faces compared as sets of sample coordinates, so relabelling is ignored.
std::set<std::vector<std::array<double, 3>>> face_signature(const SurfacePointSet& s, const FaceSet& f) {
  std::set<std::vector<std::array<double, 3>>> out;
  for (const auto& face : f.faces) {
    std::vector<std::array<double, 3>> pts;
    for (int i : face) pts.push_back({s.points[i].x(), s.points[i].y(), s.points[i].z()});
    std::sort(pts.begin(), pts.end());
    out.insert(pts);
  }
  return out;
}

TEST(SegmentationProperty, InvariantToPointOrder) {
  for (const char* name : {"wrench", "hexkey", "pawl", "gear"}) {
    const SurfacePointSet& s = model(name).samples;
    std::vector<std::size_t> perm(s.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(5));
    SurfacePointSet q;
    for (std::size_t i : perm) {
      q.points.push_back(s.points[i]);
      q.normals.push_back(s.normals[i]);
      q.triangle.push_back(s.triangle[i]);
      q.area_weight.push_back(s.area_weight[i]);
    }
    const SegmentationParams p = seg_params(name);
    EXPECT_EQ(face_signature(s, segment_tool(s, p)), face_signature(q, segment_tool(q, p))) << name;
  }
}

TEST(SegmentationProperty, FacesAreNormalCoherent) {
  for (const std::string& name : kFlat) {
    const ObjectModel& m = model(name);
    double worst = 0.0;
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
      for (int i : m.faces.faces[f]) {
        worst = std::max(worst, std::acos(std::clamp(m.samples.normals[i].dot(m.faces.mean_normal[f]), -1.0, 1.0)));
      }
    }
    EXPECT_LE(worst, 1e-3) << name;
  }
}

TEST(SegmentationProperty, FacesAreEpsilonConnected) {
  for (const char* name : {"wrench", "hexkey", "pawl", "gear", "probe", "cube"}) {
    const ObjectModel& m = model(name);
    const SegmentationParams p = seg_params(name);
    for (const auto& face : m.faces.faces) {
      std::vector<Vec3> pts;
      for (int i : face) pts.push_back(m.samples.points[i]);
      const std::vector<int> label = dbscan(pts, p.epsilon, p.n_min);
      EXPECT_TRUE(std::all_of(label.begin(), label.end(), [](int l) { return l == 0; })) << name;
    }
  }
}

TEST(SegmentationProperty, FacesDisjointAndCoverNonNoise) {
  for (const char* name : {"wrench", "hexkey", "pawl", "gear", "probe", "cube"}) {
    const ObjectModel& m = model(name);
    std::vector<int> seen(m.samples.size(), 0);
    for (const auto& face : m.faces.faces) {
      EXPECT_GE(static_cast<int>(face.size()), seg_params(name).n_min);
      for (int i : face) ++seen[i];
    }
    for (int i : m.faces.noise) ++seen[i];
    for (int c : seen) EXPECT_EQ(c, 1) << name;
  }
}

TEST(SegmentationProperty, InitClpsGivesExactlyNFacePerFace) {
  for (const char* name : {"wrench", "hexkey", "pawl", "gear", "probe"}) {
    const ObjectModel& m = model(name);
    for (int n_face : {1, 3, 7}) {
      std::vector<int> count(m.faces.size(), 0);
      for (const ClpSeed& c : init_clps(m.faces, n_face, 11)) {
        EXPECT_EQ(m.faces.face_of[c.sample], c.face);
        ++count[c.face];
      }
      for (int c : count) EXPECT_EQ(c, n_face) << name;
    }
  }
}

}  // namespace
