#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "multiscope/memory.hpp"
#include "multiscope/object_model.hpp"
#include "multiscope/random.hpp"
#include "multiscope/scope.hpp"
#include "multiscope/sim.hpp"

namespace multiscope {

struct TrialSpec {
  std::string tool = "wrench";
  std::vector<PokeAction> actions;
  std::uint64_t seed = 1;
  NoiseSpec noise;
  FilterConfig filter;
  Transform world_from_tool_ee = default_tool_ee();
  Pose2 truth_t;  // both zero in the simulated protocol
  Pose2 truth_p;
  TaskSpec task;
  bool include_gt = false;
};

struct ActionRecord {
  int action = 0;
  Pose2 estimate_t;
  Pose2 estimate_p;
  PoseError error_t{};
  PoseError error_p{};
  bool task_success = false;
  bool dropout = false;
  double mean_top_sc = 0.0;
  std::vector<double> best_history;
  std::vector<double> best_unshifted;
};

struct TrialResult {
  std::vector<ActionRecord> actions;
  std::vector<ScopeTraceRow> trace;
  MemoryState memory;

  const ActionRecord& final() const { return actions.back(); }
};

/// Uniform pose pairs over the init box; with include_gt the first pair is
/// the ground truth.
inline std::vector<OppPair> init_opps(const FilterConfig& cfg, std::uint64_t seed, bool include_gt,
                                      const Pose2& truth_t = {}, const Pose2& truth_p = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-cfg.x_max, cfg.x_max);
  std::uniform_real_distribution<double> uz(-cfg.z_max, cfg.z_max);
  std::uniform_real_distribution<double> ut(-cfg.theta_max, cfg.theta_max);
  std::vector<OppPair> pairs(static_cast<std::size_t>(cfg.n_opp));
  for (OppPair& q : pairs) {
    q.pose_t = {ux(rng), uz(rng), ut(rng)};
    q.pose_p = {ux(rng), uz(rng), ut(rng)};
  }
  if (include_gt && !pairs.empty()) {
    pairs[0].pose_t = truth_t;
    pairs[0].pose_p = truth_p;
  }
  return pairs;
}

/// Full estimator over a sequence of pokes; records the best pair's pose
/// errors after every action.
inline TrialResult run_trial(const ObjectModel& tool, const ObjectModel& probe, const TrialSpec& spec,
                             bool keep_trace = false) {
  spec.filter.validate();
  TrialResult result;
  std::vector<OppPair> pairs = init_opps(spec.filter, derive_seed(spec.seed, {tag(Stream::kInit)}), spec.include_gt,
                                         spec.truth_t, spec.truth_p);
  for (std::size_t a = 0; a < spec.actions.size(); ++a) {
    const auto ai = static_cast<std::uint64_t>(a);
    const Observation obs = synthesize_observation(spec.actions[a], spec.world_from_tool_ee, spec.truth_t,
                                                   spec.truth_p, spec.noise,
                                                   derive_seed(spec.seed, {tag(Stream::kObservation), ai}));
    const Scene scene{tool, probe, obs};
    ActionResult ar = scope_action(std::move(pairs), scene, result.memory, static_cast<int>(a), spec.filter,
                                   spec.seed, keep_trace ? &result.trace : nullptr);
    ActionRecord rec;
    rec.action = static_cast<int>(a);
    rec.estimate_t = ar.pairs.front().pose_t;
    rec.estimate_p = ar.pairs.front().pose_p;
    rec.error_t = pose_error(rec.estimate_t, spec.truth_t);
    rec.error_p = pose_error(rec.estimate_p, spec.truth_p);
    rec.task_success = spec.tool == "wrench" && check_task_success(rec.estimate_t, spec.truth_t, spec.task);
    rec.dropout = ar.dropout;
    rec.mean_top_sc = ar.mean_top_sc;
    rec.best_history = std::move(ar.best_history);
    rec.best_unshifted = std::move(ar.best_unshifted);
    result.actions.push_back(std::move(rec));
    pairs = std::move(ar.pairs);
  }
  return result;
}

}  // namespace multiscope
