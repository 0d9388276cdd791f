#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "multiscope/cpfgrasp.hpp"
#include "multiscope/geometry.hpp"
#include "multiscope/memory.hpp"
#include "multiscope/object_model.hpp"
#include "multiscope/parallel.hpp"
#include "multiscope/random.hpp"
#include "multiscope/sdf.hpp"
#include "multiscope/sim.hpp"
#include "multiscope/wrench.hpp"

namespace multiscope {

inline constexpr double kDeg = std::numbers::pi / 180.0;

/// Loss weights. `m` scales the memory loss; 1 leaves S_OPP = S_C + L_M.
struct LossWeights {
  double p = 1.0;
  double c = 50.0;
  double f = 0.2;
  double gamma = 0.5;
  double m = 1.0;
};

/// Pose perturbation schedule: std = base * gamma_a^step * rho(action),
/// rho(a) = max(rho_floor, rho_base^(a + 1)), times `boost` after dropout.
struct NoiseSchedule {
  double sigma_x = 5e-3;
  double sigma_z = 5e-3;
  double sigma_theta = 5.0 * kDeg;
  double gamma_a = 0.8;
  double rho_base = 0.7;
  double rho_floor = 0.3;
  double boost = 3.0;

  double scale(int step, int action, bool boosted) const {
    const double rho = std::max(rho_floor, std::pow(rho_base, action + 1));
    return std::pow(gamma_a, step) * rho * (boosted ? boost : 1.0);
  }
};

struct FilterConfig {
  int n_opp = 50;
  int n_os = 8;
  int n_top = 10;
  double eps_pp = 10.0;
  double beta = 5.0;
  double delta_c = 2.0;
  double x_max = 0.03;
  double z_max = 0.03;
  double theta_max = 30.0 * kDeg;
  LossWeights weights;
  NoiseSchedule noise;
  bool memory = true;
  double penetration_margin = kDefaultPenetrationMargin;
  bool symmetric_penetration = true;
  CpfParams cpf;
  SensorNoise sensor;
  int jobs = 1;

  void validate() const {
    if (n_top < 1 || n_opp < n_top) throw std::invalid_argument("need n_opp >= n_top >= 1");
    if (n_os < 1) throw std::invalid_argument("n_os must be positive");
    if (!(noise.gamma_a > 0.0 && noise.gamma_a <= 1.0)) throw std::invalid_argument("gamma_a must lie in (0, 1]");
    if (!(delta_c > 1.0)) throw std::invalid_argument("delta_c must exceed 1");
    const LossWeights& w = weights;
    if (w.p < 0 || w.c < 0 || w.f < 0 || w.gamma < 0 || w.m < 0) throw std::invalid_argument("negative loss weight");
    if (w.p + w.c + w.f + w.gamma + (memory ? w.m : 0.0) <= 0.0) throw std::invalid_argument("all losses disabled");
  }

  bool needs_contacts() const {
    return weights.c > 0 || weights.f > 0 || weights.gamma > 0 || (memory && weights.m > 0);
  }
};

struct Losses {
  double p = 0.0;
  double c = 0.0;
  double f = 0.0;
  double gamma = 0.0;
  double m = 0.0;
};

struct OppPair {
  Pose2 pose_t;
  Pose2 pose_p;
  ContactBelief belief_t;
  ContactBelief belief_p;
  int n_pp = 0;
  double eps_t = 0.0;
  double eps_p = 0.0;
  Losses loss;
  double s_c = 0.0;
  double s_opp = 0.0;
  Vec3 contact_t = Vec3::Zero();  // expected contacts, end-effector frames
  Vec3 contact_p = Vec3::Zero();
  Vec3 carried_t = Vec3::Zero();  // the same, from the previous action
  Vec3 carried_p = Vec3::Zero();
  bool evaluated = false;
  bool has_carried = false;
};

/// The two grasped objects and what was measured for the current action.
struct Scene {
  const ObjectModel& tool;
  const ObjectModel& probe;
  Observation obs;
};

inline double loss_penetration(int n_pp, double eps_pp) { return std::max(0.0, n_pp - eps_pp); }

/// Score-weighted pairwise distance between the two contact beliefs, with
/// each belief's points mapped from its end-effector frame to the world.
inline double loss_contact(const ContactBelief& bt, const Transform& world_from_t, const ContactBelief& bp,
                           const Transform& world_from_p) {
  std::vector<Vec3> rp(bp.size());
  for (std::size_t j = 0; j < bp.size(); ++j) rp[j] = world_from_p * bp.particles[j].r;
  double sum = 0.0;
  for (const ContactParticle& a : bt.particles) {
    if (a.s == 0.0) continue;
    const Vec3 ra = world_from_t * a.r;
    double inner = 0.0;
    for (std::size_t j = 0; j < bp.size(); ++j) inner += bp.particles[j].s * (ra - rp[j]).norm();
    sum += a.s * inner;
  }
  return sum;
}

/// Score-weighted pairwise violation of equal-and-opposite contact forces,
/// in the world frame.
inline double loss_force_align(const ContactBelief& bt, const Transform& world_from_t, const ContactBelief& bp,
                               const Transform& world_from_p) {
  std::vector<Vec3> wp(bp.size());
  for (std::size_t j = 0; j < bp.size(); ++j) wp[j] = world_from_p.linear() * bp.particles[j].f;
  double sum = 0.0;
  for (const ContactParticle& a : bt.particles) {
    if (a.s == 0.0) continue;
    const Vec3 wa = world_from_t.linear() * a.f;
    double inner = 0.0;
    for (std::size_t j = 0; j < bp.size(); ++j) inner += bp.particles[j].s * (-wa - wp[j]).norm();
    sum += a.s * inner;
  }
  return sum;
}

inline double loss_wrench(double eps_t, double eps_p, double min_t, double min_p) {
  return eps_t - min_t + eps_p - min_p;
}

inline double score_consistency(const Losses& l, const LossWeights& w) {
  return w.p * l.p + w.c * l.c + w.f * l.f + w.gamma * l.gamma;
}

inline double score_opp(const Losses& l, const LossWeights& w) { return score_consistency(l, w) + w.m * l.m; }

/// Lowest wrench errors seen so far in the current action.
struct WrenchMinima {
  double t = std::numeric_limits<double>::infinity();
  double p = std::numeric_limits<double>::infinity();

  void update(const std::vector<OppPair>& pairs) {
    for (const OppPair& q : pairs) {
      t = std::min(t, q.eps_t);
      p = std::min(p, q.eps_p);
    }
  }
};

/// Runs both contact filters for a pair and fills every loss except the
/// wrench and memory terms, which need batch-level state.
inline void evaluate_pair(OppPair& pair, const Scene& scene, const FilterConfig& cfg, std::uint64_t seed_t,
                          std::uint64_t seed_p) {
  const Transform world_from_t = scene.obs.world_from_tool_ee;
  const Transform world_from_p = scene.obs.world_from_probe_ee;
  const LossWeights& w = cfg.weights;

  pair.loss = Losses{};
  pair.n_pp = 0;
  if (w.p > 0) {
    pair.n_pp = penetration_count(scene.tool.samples, scene.tool.sdf, world_from_t * pair.pose_t.to_transform(),
                                  scene.probe.samples, scene.probe.sdf, world_from_p * pair.pose_p.to_transform(),
                                  cfg.penetration_margin, cfg.symmetric_penetration);
    pair.loss.p = loss_penetration(pair.n_pp, cfg.eps_pp);
  }
  if (cfg.needs_contacts()) {
    pair.belief_t = cpfgrasp_run(scene.tool, pair.pose_t, scene.obs.tool, cfg.sensor, cfg.cpf, seed_t);
    pair.belief_p = cpfgrasp_run(scene.probe, pair.pose_p, scene.obs.probe, cfg.sensor, cfg.cpf, seed_p);
    pair.contact_t = pair.belief_t.mean_contact();
    pair.contact_p = pair.belief_p.mean_contact();
    pair.eps_t = wrench_error(pair.belief_t, scene.obs.tool, cfg.cpf.norm);
    pair.eps_p = wrench_error(pair.belief_p, scene.obs.probe, cfg.cpf.norm);
    if (w.c > 0) pair.loss.c = loss_contact(pair.belief_t, world_from_t, pair.belief_p, world_from_p);
    if (w.f > 0) pair.loss.f = loss_force_align(pair.belief_t, world_from_t, pair.belief_p, world_from_p);
  } else {
    pair.belief_t = {};
    pair.belief_p = {};
    pair.eps_t = pair.eps_p = 0.0;
  }
  pair.evaluated = true;
}

inline void apply_memory(std::vector<OppPair>& pairs, const Scene& scene, const FilterConfig& cfg,
                         const MemoryState& memory) {
  for (OppPair& q : pairs) {
    q.loss.m = cfg.memory && cfg.weights.m > 0
                   ? loss_memory(q.pose_t, q.pose_p, memory, scene.tool.sdf, scene.probe.sdf)
                   : 0.0;
  }
}

inline void finalize_scores(std::vector<OppPair>& pairs, const WrenchMinima& minima, const LossWeights& w) {
  for (OppPair& q : pairs) {
    q.loss.gamma = w.gamma > 0 ? loss_wrench(q.eps_t, q.eps_p, minima.t, minima.p) : 0.0;
    q.s_c = score_consistency(q.loss, w);
    q.s_opp = score_opp(q.loss, w);
  }
}

inline double ranking_cost(const OppPair& q, bool consistency_only) { return consistency_only ? q.s_c : q.s_opp; }

/// Indices of the pairs ordered by cost, ties broken by position.
inline std::vector<int> order_by_cost(const std::vector<OppPair>& pairs, bool consistency_only) {
  std::vector<int> idx(pairs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return ranking_cost(pairs[a], consistency_only) < ranking_cost(pairs[b], consistency_only);
  });
  return idx;
}

/// Softmin systematic resampling to `n` pairs; the lowest-cost pair is
/// placed first and always survives.
inline std::vector<OppPair> importance_resample(const std::vector<OppPair>& pairs, int n, double beta,
                                                std::mt19937_64& rng, bool consistency_only = false) {
  if (pairs.empty()) throw std::invalid_argument("importance_resample: empty population");
  std::vector<double> costs;
  costs.reserve(pairs.size());
  for (const OppPair& q : pairs) costs.push_back(ranking_cost(q, consistency_only));
  std::vector<double> w = softmin_weights(costs, beta);
  double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) {
    std::cerr << "warning: degenerate resampling weights, falling back to uniform\n";
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
  }
  const int best = order_by_cost(pairs, consistency_only).front();
  std::vector<OppPair> out;
  out.reserve(static_cast<std::size_t>(n));
  out.push_back(pairs[best]);
  const std::vector<int> pick = systematic_resample(w, n, rng);
  bool skipped_best = false;
  for (int k : pick) {
    if (static_cast<int>(out.size()) == n) break;
    if (k == best && !skipped_best) {
      skipped_best = true;  // already placed first
      continue;
    }
    out.push_back(pairs[k]);
  }
  while (static_cast<int>(out.size()) < n) out.push_back(pairs[pick.back()]);
  return out;
}

/// Gaussian pose perturbation of every pair but the first.
inline void noise_model(std::vector<OppPair>& pairs, int step, int action, bool boosted, const NoiseSchedule& s,
                        std::mt19937_64& rng) {
  const double k = s.scale(step, action, boosted);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 1; i < pairs.size(); ++i) {
    for (Pose2* pose : {&pairs[i].pose_t, &pairs[i].pose_p}) {
      pose->x += k * s.sigma_x * gauss(rng);
      pose->z += k * s.sigma_z * gauss(rng);
      pose->theta = wrap_angle(pose->theta + k * s.sigma_theta * gauss(rng));
    }
  }
}

inline bool same_poses(const OppPair& a, const OppPair& b) {
  return a.pose_t.x == b.pose_t.x && a.pose_t.z == b.pose_t.z && a.pose_t.theta == b.pose_t.theta &&
         a.pose_p.x == b.pose_p.x && a.pose_p.z == b.pose_p.z && a.pose_p.theta == b.pose_p.theta;
}

/// Keeps the n_top lowest-cost distinct pose pairs of prev and curr
/// together, then pads back to n by softmin resampling among them. Ties
/// favour curr. Resampled copies of one pose count once; otherwise they
/// crowd every other hypothesis out of the kept set.
inline std::vector<OppPair> prevent_divergence(const std::vector<OppPair>& prev, const std::vector<OppPair>& curr,
                                               int n_top, int n, double beta, std::mt19937_64& rng) {
  std::vector<OppPair> merged;
  merged.reserve(curr.size() + prev.size());
  merged.insert(merged.end(), curr.begin(), curr.end());
  merged.insert(merged.end(), prev.begin(), prev.end());
  const std::vector<int> order = order_by_cost(merged, false);
  std::vector<OppPair> top;
  top.reserve(static_cast<std::size_t>(n));
  for (int k : order) {
    if (static_cast<int>(top.size()) == n_top) break;
    const bool seen = std::any_of(top.begin(), top.end(), [&](const OppPair& q) { return same_poses(q, merged[k]); });
    if (!seen) top.push_back(merged[k]);
  }
  const int keep = static_cast<int>(top.size());
  if (keep >= n) return top;

  std::vector<double> costs;
  for (const OppPair& q : top) costs.push_back(q.s_opp);
  const std::vector<double> w = softmin_weights(costs, beta);
  const std::vector<int> pick = systematic_resample(w, n - keep, rng);
  for (int k : pick) top.push_back(top[static_cast<std::size_t>(k)]);
  return top;
}

/// Mean S_C over the n_top lowest-S_OPP pairs.
inline double mean_top_consistency(const std::vector<OppPair>& pairs, int n_top, bool consistency_only) {
  const std::vector<int> order = order_by_cost(pairs, consistency_only);
  const int m = std::min<int>(n_top, static_cast<int>(pairs.size()));
  double sum = 0.0;
  for (int k = 0; k < m; ++k) sum += pairs[order[k]].s_c;
  return sum / m;
}

struct ScopeTraceRow {
  int action;
  int step;
  int pair;
  Losses loss;
  double s_opp;
  Pose2 pose_t;
  Pose2 pose_p;
};

struct ActionResult {
  std::vector<OppPair> pairs;  // best first
  double mean_top_sc = 0.0;    // handed to the next action's dropout check
  double initial_best = 0.0;   // lowest S_OPP after the first step
  std::vector<double> best_history;  // lowest S_OPP after each step
  // The same with eta_gamma * (min_t + min_p) added back. The running minima
  // shift every pair's S_OPP when they drop; this one cannot increase.
  std::vector<double> best_unshifted;
  bool dropout = false;
};

/// All SCOPE steps for one action.
inline ActionResult scope_action(std::vector<OppPair> pairs, const Scene& scene, MemoryState& memory, int action,
                                 const FilterConfig& cfg, std::uint64_t seed,
                                 std::vector<ScopeTraceRow>* trace = nullptr) {
  cfg.validate();
  if (scene.obs.tool.frame != Frame::kToolEE || scene.obs.probe.frame != Frame::kProbeEE) {
    throw std::invalid_argument("scope_action: observation frame mismatch");
  }
  for (OppPair& q : pairs) {
    q.has_carried = q.evaluated;
    q.carried_t = q.contact_t;
    q.carried_p = q.contact_p;
  }
  std::mt19937_64 rng(derive_seed(seed, {tag(Stream::kResample), static_cast<std::uint64_t>(action)}));
  std::mt19937_64 noise_rng(derive_seed(seed, {tag(Stream::kNoiseModel), static_cast<std::uint64_t>(action)}));

  ActionResult result;
  WrenchMinima minima;
  bool boosted = false;
  std::vector<OppPair> prev;
  for (int step = 0; step < cfg.n_os; ++step) {
    const auto a = static_cast<std::uint64_t>(action);
    const auto s = static_cast<std::uint64_t>(step);
    parallel_for(static_cast<int>(pairs.size()), cfg.jobs, [&](int k) {
      const auto kk = static_cast<std::uint64_t>(k);
      evaluate_pair(pairs[k], scene, cfg, derive_seed(seed, {tag(Stream::kCpfTool), a, s, kk}),
                    derive_seed(seed, {tag(Stream::kCpfProbe), a, s, kk}));
    });
    minima.update(pairs);
    if (step == 0 && cfg.memory && action > 0) {
      finalize_scores(pairs, minima, cfg.weights);
      const std::vector<int> order = order_by_cost(pairs, true);
      std::vector<CloudContribution> top;
      double mean0 = 0.0;
      for (int k = 0; k < std::min<int>(cfg.n_top, static_cast<int>(pairs.size())); ++k) {
        const OppPair& q = pairs[order[k]];
        mean0 += q.s_c;
        if (q.has_carried) top.push_back({q.carried_t, q.carried_p, q.s_c});
      }
      mean0 /= std::min<int>(cfg.n_top, static_cast<int>(pairs.size()));
      update_contact_cloud(top, action - 1, cfg.beta, memory);
      boosted = check_dropout(mean0, memory, cfg.delta_c, action - 1);
      result.dropout = boosted;
    }
    apply_memory(pairs, scene, cfg, memory);
    finalize_scores(pairs, minima, cfg.weights);
    if (step > 0) {
      finalize_scores(prev, minima, cfg.weights);
      pairs = prevent_divergence(prev, pairs, cfg.n_top, cfg.n_opp, cfg.beta, rng);
    } else {
      const std::vector<int> order = order_by_cost(pairs, false);
      std::rotate(pairs.begin(), pairs.begin() + order.front(), pairs.begin() + order.front() + 1);
    }
    result.best_history.push_back(pairs.front().s_opp);
    result.best_unshifted.push_back(pairs.front().s_opp +
                                    (cfg.weights.gamma > 0 ? cfg.weights.gamma * (minima.t + minima.p) : 0.0));
    if (step == 0) result.initial_best = pairs.front().s_opp;
    if (trace) {
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        const OppPair& q = pairs[k];
        trace->push_back({action, step, static_cast<int>(k), q.loss, q.s_opp, q.pose_t, q.pose_p});
      }
    }
    if (step + 1 == cfg.n_os) break;
    prev = pairs;
    pairs = importance_resample(pairs, cfg.n_opp, cfg.beta, rng, step == 0);
    noise_model(pairs, step, action, boosted, cfg.noise, noise_rng);
  }
  result.mean_top_sc = mean_top_consistency(pairs, cfg.n_top, false);
  memory.prev_mean_score = result.mean_top_sc;
  result.pairs = std::move(pairs);
  return result;
}

}  // namespace multiscope
