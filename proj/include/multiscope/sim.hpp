#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "multiscope/geometry.hpp"
#include "multiscope/random.hpp"
#include "multiscope/shapes.hpp"
#include "multiscope/wrench.hpp"

namespace multiscope {

// Tool outlines are drawn in millimetres in the (x, z) plane of the tool
// body frame and extruded along y. The body frame coincides with the
// end-effector frame at the nominal grasp.
namespace tools {

inline constexpr double kMm = 1e-3;
inline constexpr double kWrenchMouth = 12.7 * kMm;  // 1/2 inch opening
inline constexpr double kWrenchThickness = 6.0 * kMm;
inline constexpr double kMouthBottom = 52.0 * kMm;
inline constexpr double kMouthTop = 70.0 * kMm;

inline std::vector<shapes::Vec2> scaled(std::initializer_list<std::pair<double, double>> mm) {
  std::vector<shapes::Vec2> out;
  for (const auto& [x, z] : mm) out.emplace_back(x * kMm, z * kMm);
  return out;
}

/// Open-end wrench: handle bar, chamfered head, and a 12.7 mm mouth whose
/// jaw flats are the planes x = +-6.35 mm.
inline std::vector<shapes::Vec2> wrench_outline() {
  return scaled({{-6, -40}, {6, -40}, {6, 30}, {14, 38}, {14, 66}, {10, 70}, {6.35, 70}, {6.35, 52},
                 {-6.35, 52}, {-6.35, 70}, {-10, 70}, {-14, 66}, {-14, 38}, {-6, 30}});
}

inline std::vector<shapes::Vec2> hexkey_outline() {
  return scaled({{-2.5, -30}, {2.5, -30}, {2.5, 55}, {25, 55}, {25, 57.5}, {22.5, 60}, {-2.5, 60}});
}

inline std::vector<shapes::Vec2> pawl_outline() {
  return scaled({{-8, -30}, {8, -30}, {8, 15}, {18, 15}, {18, 28}, {30, 28}, {30, 38}, {10, 50}, {-8, 50}});
}

/// Spur gear centred 30 mm above the grasp point.
inline std::vector<shapes::Vec2> gear_outline(int teeth) {
  const double root = 20.0 * kMm;
  const double tip = 26.0 * kMm;
  const double cz = 30.0 * kMm;
  const double pitch = 2.0 * std::numbers::pi / teeth;
  std::vector<shapes::Vec2> out;
  for (int k = 0; k < teeth; ++k) {
    const double a = k * pitch - 0.5 * std::numbers::pi;
    const double angles[4] = {a, a + 0.12 * pitch, a + 0.38 * pitch, a + 0.5 * pitch};
    const double radii[4] = {root, tip, tip, root};
    for (int q = 0; q < 4; ++q) {
      out.emplace_back(radii[q] * std::cos(angles[q]), cz + radii[q] * std::sin(angles[q]));
    }
  }
  return out;
}

inline constexpr double kProbeLength = 60.0 * kMm;
inline constexpr double kProbeRadius = 3.0 * kMm;

/// Capped cylinder along +z with a hemispherical tip at z = kProbeLength.
inline TriMesh probe_mesh(int segments = 24, int tip_rings = 8) {
  std::vector<shapes::Vec2> profile = {{0.0, 0.0}, {kProbeRadius, 0.0}};
  const double cz = kProbeLength - kProbeRadius;
  for (int k = 0; k < tip_rings; ++k) {
    const double a = 0.5 * std::numbers::pi * k / tip_rings;
    profile.emplace_back(kProbeRadius * std::cos(a), cz + kProbeRadius * std::sin(a));
  }
  profile.emplace_back(0.0, kProbeLength);
  return shapes::revolve(profile, segments);
}

inline Vec3 probe_tip() { return Vec3(0.0, 0.0, kProbeLength); }

}  // namespace tools

inline const std::vector<std::string>& tool_names() {
  static const std::vector<std::string> names = {"wrench", "hexkey", "pawl", "gear"};
  return names;
}

/// Procedural stand-ins for the grasped tools, the probe, and a 40 mm test cube.
inline TriMesh make_tool_mesh(const std::string& name) {
  if (name == "wrench") return shapes::extrude(tools::wrench_outline(), tools::kWrenchThickness);
  if (name == "hexkey") return shapes::extrude(tools::hexkey_outline(), 5.0 * tools::kMm);
  if (name == "pawl") return shapes::extrude(tools::pawl_outline(), 5.0 * tools::kMm);
  if (name == "gear") return shapes::extrude(tools::gear_outline(8), 6.0 * tools::kMm);
  if (name == "probe") return tools::probe_mesh();
  if (name == "cube") return shapes::box(Vec3::Constant(-0.02), Vec3::Constant(0.02));
  throw std::invalid_argument("unknown tool: " + name);
}

/// One poke: the probe tip presses on the tool along the inward normal.
struct PokeAction {
  Vec3 tool_point;   // tool body frame
  Vec3 tool_normal;  // outward unit normal, tool body frame
  Vec3 probe_point = tools::probe_tip();  // probe body frame
  double force = 3.0;                     // N
};

inline PokeAction make_poke(const Vec3& point_mm, const Vec3& normal) {
  PokeAction a;
  a.tool_point = point_mm * tools::kMm;
  a.tool_normal = normal.normalized();
  return a;
}

/// Bundled action sets on distinct faces with pairwise non-parallel normals,
/// except the pawl: its flats face only x, y, z and the slope, so two of its
/// five pokes share the -z direction.
inline std::vector<PokeAction> curated_actions(const std::string& tool) {
  const double r = std::numbers::sqrt2 / 2.0;
  if (tool == "wrench") {
    return {make_poke({14, 0, 50}, {1, 0, 0}),    make_poke({12, 0, 68}, {r, 0, r}),
            make_poke({0, 0, 52}, {0, 0, 1}),     make_poke({-9, 3, 45}, {0, 1, 0}),
            make_poke({10, 0, 34}, {r, 0, -r})};
  }
  if (tool == "hexkey") {
    return {make_poke({2.5, 0, 20}, {1, 0, 0}),   make_poke({15, 0, 60}, {0, 0, 1}),
            make_poke({23.75, 0, 58.75}, {r, 0, r}), make_poke({0, 2.5, 10}, {0, 1, 0}),
            make_poke({0, 0, -30}, {0, 0, -1})};
  }
  if (tool == "pawl") {
    return {make_poke({8, 0, 0}, {1, 0, 0}),      make_poke({24, 0, 28}, {0, 0, -1}),
            make_poke({20, 0, 44}, Vec3(12, 0, 20)),  make_poke({0, 2.5, 10}, {0, 1, 0}),
            make_poke({0, 0, -30}, {0, 0, -1})};
  }
  if (tool == "gear") {
    // Tooth tips at the outline corners 1-2 of each tooth; the normals are
    // the radial directions of the tip chords.
    const auto outline = tools::gear_outline(8);
    std::vector<PokeAction> out;
    for (int k : {1, 3, 6}) {
      const shapes::Vec2 a = outline[4 * k + 1] / tools::kMm;
      const shapes::Vec2 b = outline[4 * k + 2] / tools::kMm;
      const shapes::Vec2 mid = 0.5 * (a + b);
      const shapes::Vec2 d = b - a;
      out.push_back(make_poke({mid.x(), 0, mid.y()}, Vec3(d.y(), 0, -d.x())));
    }
    out.push_back(make_poke({0, 3, 30}, {0, 1, 0}));
    {
      const shapes::Vec2 a = outline[4 * 4 + 3] / tools::kMm;
      const shapes::Vec2 b = outline[4 * 5 + 0] / tools::kMm;
      const shapes::Vec2 mid = 0.5 * (a + b);
      const shapes::Vec2 d = b - a;
      out.push_back(make_poke({mid.x(), 0, mid.y()}, Vec3(d.y(), 0, -d.x())));
    }
    return out;
  }
  if (tool == "cube") {
    return {make_poke({20, 0, 5}, {1, 0, 0}), make_poke({5, 0, 20}, {0, 0, 1}), make_poke({-5, 20, 0}, {0, 1, 0})};
  }
  throw std::invalid_argument("no curated actions for tool: " + tool);
}

/// Poke on the left jaw flat of the wrench, the small face that engages a
/// screw head. Above z = 66 mm the line of action misses the outer flat on
/// the far side, so the contact is unique.
inline PokeAction wrench_jaw_poke() { return make_poke({-6.35, 0, 68}, {1, 0, 0}); }

/// Area-uniform random poke on the tool surface.
inline PokeAction random_action(const TriMesh& tool, std::uint64_t seed, double force = 3.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(rng) * tool.surface_area();
  std::size_t t = 0;
  for (; t + 1 < tool.size(); ++t) {
    if (u < tool.areas()[t]) break;
    u -= tool.areas()[t];
  }
  PokeAction a;
  a.tool_point = triangle_point(tool.corner(t, 0), tool.corner(t, 1), tool.corner(t, 2), unit(rng), unit(rng));
  a.tool_normal = tool.normals()[t];
  a.force = force;
  return a;
}

enum class ActionStrategy { kRandom, kCurated };

inline PokeAction generate_action(const std::string& tool, const TriMesh& mesh, ActionStrategy strategy,
                                  std::uint64_t seed, int curated_index = 0) {
  if (strategy == ActionStrategy::kRandom) return random_action(mesh, seed);
  const auto set = curated_actions(tool);
  return set.at(static_cast<std::size_t>(curated_index) % set.size());
}

/// Fixed world placement of the tool arm's end-effector.
inline Transform default_tool_ee() {
  Transform x = Transform::Identity();
  x.translation() = Vec3(0.45, 0.0, 0.35);
  return x;
}

/// Probe end-effector pose that brings the probe tip onto the tool contact
/// with the probe axis along the inward normal. The probe roll is chosen so
/// its y axis follows the tool's y axis whenever that is well defined.
inline Transform probe_ee_for(const PokeAction& a, const Transform& world_from_tool_ee, const Pose2& tool_truth,
                              const Pose2& probe_truth) {
  const Transform world_from_tool = world_from_tool_ee * tool_truth.to_transform();
  const Vec3 contact = world_from_tool * a.tool_point;
  const Vec3 n = (world_from_tool.linear() * a.tool_normal).normalized();
  const Vec3 z = -n;
  Vec3 y_ref = world_from_tool.linear() * Vec3::UnitY();
  if (std::abs(y_ref.dot(z)) > 0.9) y_ref = world_from_tool.linear() * Vec3::UnitX();
  const Vec3 y = (y_ref - y_ref.dot(z) * z).normalized();
  const Vec3 x = y.cross(z);
  Transform world_from_probe = Transform::Identity();
  world_from_probe.linear().col(0) = x;
  world_from_probe.linear().col(1) = y;
  world_from_probe.linear().col(2) = z;
  world_from_probe.translation() = contact - z * a.probe_point.z() - x * a.probe_point.x() - y * a.probe_point.y();
  // world_from_probe is the probe body; remove the probe's grasp offset.
  return world_from_probe * probe_truth.to_transform().inverse(Eigen::Isometry);
}

/// Everything the estimator receives for one action.
struct Observation {
  Wrench tool;   // in the tool end-effector frame
  Wrench probe;  // in the probe end-effector frame
  Transform world_from_tool_ee = Transform::Identity();
  Transform world_from_probe_ee = Transform::Identity();
};

/// Ground-truth end-effector wrenches for a poke: the tool receives
/// -force * n at its contact, the probe the reaction at its tip.
inline Observation synthesize_observation(const PokeAction& a, const Transform& world_from_tool_ee,
                                          const Pose2& tool_truth, const Pose2& probe_truth, const NoiseSpec& noise,
                                          std::uint64_t seed) {
  Observation obs;
  obs.world_from_tool_ee = world_from_tool_ee;
  obs.world_from_probe_ee = probe_ee_for(a, world_from_tool_ee, tool_truth, probe_truth);

  const Transform world_from_tool = world_from_tool_ee * tool_truth.to_transform();
  const Transform world_from_probe = obs.world_from_probe_ee * probe_truth.to_transform();
  const Vec3 f_world = -a.force * (world_from_tool.linear() * a.tool_normal);

  const Wrench tool_body = contact_wrench(a.tool_point, world_from_tool.linear().transpose() * f_world);
  const Vec3 f_probe_body = world_from_probe.linear().transpose() * (-f_world);
  const Wrench probe_body = contact_wrench(a.probe_point, f_probe_body);

  std::mt19937_64 rng(seed);
  obs.tool = inject_noise(transform_wrench(tool_body, tool_truth.to_transform(), Frame::kToolEE), noise, rng);
  obs.probe = inject_noise(transform_wrench(probe_body, probe_truth.to_transform(), Frame::kProbeEE), noise, rng);
  return obs;
}

struct PoseError {
  double dx;
  double dz;
  double dtheta;       // wrapped, signed
  double translation;  // m
  double rotation;     // rad, signed
};

inline PoseError pose_error(const Pose2& estimate, const Pose2& truth) {
  const double dx = estimate.x - truth.x;
  const double dz = estimate.z - truth.z;
  const double dt = wrap_angle(estimate.theta - truth.theta);
  return {dx, dz, dt, std::hypot(dx, dz), dt};
}

enum class ScrewShape { kSquare, kCylinder };

/// Screw-engagement task: a square head (or a cylinder) must end up strictly
/// inside the wrench mouth when the approach is planned with the estimated
/// tool pose and executed on the true one.
struct TaskSpec {
  double opening = tools::kWrenchMouth;
  double side = 8.9 * tools::kMm;  // square side, or cylinder diameter
  ScrewShape shape = ScrewShape::kSquare;
  double mouth_bottom = tools::kMouthBottom;  // slot extent along tool z
  double mouth_top = tools::kMouthTop;
  double mouth_x = 0.0;  // slot centreline

  double tolerance() const { return 0.5 * (opening - side); }
  Vec3 target() const { return Vec3(mouth_x, 0.0, 0.5 * (mouth_bottom + mouth_top)); }

  static TaskSpec tight() { return {}; }

  /// Real-robot variant: a cylinder leaving 3.5 mm on each side.
  static TaskSpec loose() {
    TaskSpec t;
    t.shape = ScrewShape::kCylinder;
    t.side = tools::kWrenchMouth - 2.0 * 3.5 * tools::kMm;
    return t;
  }
};

inline bool check_task_success(const Pose2& estimate, const Pose2& truth, const TaskSpec& task) {
  if (!(task.opening > task.side)) throw std::invalid_argument("screw does not fit the wrench mouth");
  // Where the screw ends up in the true tool frame.
  const Transform discrepancy = truth.to_transform().inverse(Eigen::Isometry) * estimate.to_transform();
  const Vec3 screw = discrepancy * task.target();
  const double phi = std::atan2(discrepancy.linear()(0, 2), discrepancy.linear()(0, 0));
  const double half = task.shape == ScrewShape::kSquare
                          ? 0.5 * task.side * (std::abs(std::cos(phi)) + std::abs(std::sin(phi)))
                          : 0.5 * task.side;
  const double lateral_clearance = 0.5 * task.opening - (std::abs(screw.x() - task.mouth_x) + half);
  const double depth_clearance = std::min(screw.z() - half - task.mouth_bottom, task.mouth_top - (screw.z() + half));
  return lateral_clearance > 0.0 && depth_clearance > 0.0;
}

}  // namespace multiscope
