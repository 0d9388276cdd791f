#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <set>
#include <vector>

#include "multiscope/geometry.hpp"
#include "multiscope/sdf.hpp"

namespace multiscope {

/// One remembered contact. `point` is in the end-effector frame of the arm
/// holding the object, so scoring a pose hypothesis H evaluates the body-frame
/// distance field at H^-1 * point.
struct CloudEntry {
  Vec3 point = Vec3::Zero();
  double weight = 0.0;
  int action = -1;
};

struct ContactCloud {
  std::vector<CloudEntry> tool;
  std::vector<CloudEntry> probe;
};

struct MemoryState {
  ContactCloud cloud;
  std::set<int> dropped_actions;
  std::optional<double> prev_mean_score;  // S_C bar of the previous action

  bool active(int action) const { return !dropped_actions.contains(action); }
};

/// Expected contacts of one retained pair, plus its consistency cost.
struct CloudContribution {
  Vec3 tool_point;   // tool end-effector frame
  Vec3 probe_point;  // probe end-effector frame
  double score;      // S_C, lower is better
};

/// Softmin over costs: w_i = exp(-beta (c_i - min c)) / sum.
inline std::vector<double> softmin_weights(const std::vector<double>& costs, double beta) {
  std::vector<double> w(costs.size(), 0.0);
  if (costs.empty()) return w;
  const double lo = *std::min_element(costs.begin(), costs.end());
  double total = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    w[i] = std::exp(-beta * (costs[i] - lo));
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

/// Appends one entry per object per contribution, tagged with `action`.
inline void update_contact_cloud(const std::vector<CloudContribution>& top, int action, double beta,
                                 MemoryState& state) {
  std::vector<double> costs;
  costs.reserve(top.size());
  for (const CloudContribution& c : top) costs.push_back(c.score);
  const std::vector<double> w = softmin_weights(costs, beta);
  for (std::size_t i = 0; i < top.size(); ++i) {
    state.cloud.tool.push_back({top[i].tool_point, w[i], action});
    state.cloud.probe.push_back({top[i].probe_point, w[i], action});
  }
}

inline double cloud_term(const std::vector<CloudEntry>& entries, const MeshSdf& sdf, const Transform& ee_from_body,
                         const MemoryState& state) {
  if (entries.empty()) return 0.0;
  const Transform body_from_ee = ee_from_body.inverse(Eigen::Isometry);
  double sum = 0.0;
  for (const CloudEntry& e : entries) {
    if (!state.active(e.action)) continue;
    sum += e.weight * std::abs(sdf.signed_distance(body_from_ee * e.point));
  }
  return sum;
}

/// Weighted |SDF| of both contact clouds under a pose pair.
inline double loss_memory(const Pose2& pose_t, const Pose2& pose_p, const MemoryState& state, const MeshSdf& sdf_t,
                          const MeshSdf& sdf_p) {
  return cloud_term(state.cloud.tool, sdf_t, pose_t.to_transform(), state) +
         cloud_term(state.cloud.probe, sdf_p, pose_p.to_transform(), state);
}

/// Drops `previous_action` from scoring when the new action's consistency
/// cost exceeds delta_c times the last one. Returns whether it fired.
inline bool check_dropout(double mean_score_now, MemoryState& state, double delta_c, int previous_action) {
  if (!state.prev_mean_score) return false;
  if (!(mean_score_now > delta_c * *state.prev_mean_score)) return false;
  state.dropped_actions.insert(previous_action);
  return true;
}

inline void write_cloud(std::ostream& out, const std::vector<CloudEntry>& entries, const MemoryState& state) {
  out << "action,x,y,z,weight,dropped\n";
  char buf[200];
  for (const CloudEntry& e : entries) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%d\n", e.action, e.point.x(), e.point.y(),
                  e.point.z(), e.weight, state.active(e.action) ? 0 : 1);
    out << buf;
  }
}

}  // namespace multiscope
