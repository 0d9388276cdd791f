#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

#include "multiscope/geometry.hpp"
#include "multiscope/object_model.hpp"
#include "multiscope/random.hpp"
#include "multiscope/segmentation.hpp"
#include "multiscope/wrench.hpp"

namespace multiscope {

enum class ClpInit { kSegmented, kUniform };

struct CpfParams {
  ClpInit init = ClpInit::kSegmented;
  int n_face = 0;            // per face, segmented init; 0 takes the object's
  int n_clp = 60;            // total, uniform init
  int max_steps = 40;
  double tol_conv = 1e-3;    // on the best nll
  int patience = 5;
  bool elitism = true;
  double local_move_prob = 0.9;
  double lambda_dir = 10.0;  // force-direction penalty weight
  double mu = 0.3;           // friction coefficient of the cone penalty
  double lambda_friction = 10.0;
  // Resampling weights use exp(-nll / T) with T = max(1, t0 * rate^step);
  // t0 = 1 disables tempering. Reported scores always use T = 1.
  double temper_start = 1e3;
  double temper_rate = 0.5;
  // Face hops land on the face sample nearest the measured line of action
  // instead of a uniform face sample.
  bool line_guided_hops = true;
  // Each contact may slide this far (m) from its sample within the sample's
  // tangent plane towards the line of action; 0 keeps contacts on samples.
  double refine_radius = 2e-3;
  WrenchNorm norm = WrenchNorm::kL1;
};

/// Contact-location particle. `r` and `f` are in the end-effector frame.
struct ContactParticle {
  Vec3 r = Vec3::Zero();
  Vec3 f = Vec3::Zero();
  double s = 0.0;
  int face_id = -1;
  int sample = -1;  // index into the object's surface samples
  double nll = 0.0;
};

struct ContactBelief {
  std::vector<ContactParticle> particles;
  bool converged = false;
  int steps_taken = 0;
  double best_nll = std::numeric_limits<double>::infinity();

  std::size_t size() const { return particles.size(); }

  Vec3 mean_contact() const {
    Vec3 m = Vec3::Zero();
    for (const ContactParticle& p : particles) m += p.s * p.r;
    return m;
  }

  Vec3 mean_force() const {
    Vec3 m = Vec3::Zero();
    for (const ContactParticle& p : particles) m += p.s * p.f;
    return m;
  }
};

struct CpfTraceRow {
  int step;
  double best_nll;
  Vec3 mean_r;
};

inline void write_cpf_trace(std::ostream& out, const std::vector<CpfTraceRow>& rows) {
  out << "step,best_nll,mean_rx,mean_ry,mean_rz\n";
  char buf[160];
  for (const CpfTraceRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", r.step, r.best_nll, r.mean_r.x(),
                  r.mean_r.y(), r.mean_r.z());
    out << buf;
  }
}

/// nll values closer than this count as equal when picking the elite.
inline constexpr double kEliteTieTol = 1e-9;

/// Normalizes exp(-nll / temperature) into weights; returns the index of
/// the best particle.
inline int normalize_scores(std::vector<ContactParticle>& particles, double temperature = 1.0) {
  int best = 0;
  for (std::size_t i = 1; i < particles.size(); ++i) {
    if (particles[i].nll < particles[best].nll) best = static_cast<int>(i);
  }
  const double floor = particles[best].nll;
  double total = 0.0;
  for (ContactParticle& p : particles) {
    p.s = std::exp(-(p.nll - floor) / temperature);
    total += p.s;
  }
  for (ContactParticle& p : particles) p.s /= total;
  return best;
}

/// Contact particle filter for one grasped object: finds where on the posed
/// surface a single point contact explains the end-effector wrench `gamma`.
inline ContactBelief cpfgrasp_run(const ObjectModel& object, const Pose2& pose, const Wrench& gamma,
                                  const SensorNoise& noise, const CpfParams& params, std::uint64_t seed,
                                  std::vector<CpfTraceRow>* trace = nullptr) {
  if (object.faces.empty()) throw std::invalid_argument("cpfgrasp_run: object has no faces");
  std::mt19937_64 rng(seed);
  const std::vector<ClpSeed> init = params.init == ClpInit::kSegmented
                                        ? init_clps(object.faces, params.n_face > 0 ? params.n_face : object.n_face, rng())
                                        : init_clps_uniform(object.faces, params.n_clp, rng());
  const Transform ee_from_object = pose.to_transform();
  const Mat3& rot = ee_from_object.linear();

  // Every r on the line F x T / |F|^2 + t F reproduces the torque exactly.
  const double f2 = gamma.force.squaredNorm();
  const bool has_line = f2 > 1e-12;
  const Vec3 p0 = has_line ? Vec3(gamma.force.cross(gamma.torque) / f2) : Vec3::Zero();
  const Vec3 d = has_line ? Vec3(gamma.force / std::sqrt(f2)) : Vec3::UnitX();

  // Slides a sample towards the line of action: intersect the line with the
  // local tangent plane, clamp to refine_radius, project back onto the mesh,
  // and repeat once with the normal at the projected point.
  const Transform object_from_ee = ee_from_object.inverse();
  const Vec3 p0_body = object_from_ee * p0;
  const Vec3 d_body = object_from_ee.linear() * d;
  auto contact_point = [&](int i) -> Vec3 {
    const Vec3& sample = object.samples.points[i];
    if (!has_line || params.refine_radius <= 0.0) return ee_from_object * sample;
    Vec3 r = sample;
    Vec3 n = object.samples.normals[i];
    for (int it = 0; it < 2; ++it) {
      const double nd = n.dot(d_body);
      if (std::abs(nd) < 0.1) break;
      Vec3 target = p0_body + (n.dot(r - p0_body) / nd) * d_body - sample;
      const double len = target.norm();
      if (len > params.refine_radius) target *= params.refine_radius / len;
      const Vec3 x = sample + target;
      Vec3 closest;
      const double dist = object.sdf.distance(x, &closest);
      r = closest;
      if (dist > 1e-9) {
        const Vec3 away = (x - closest) / dist;
        n = away.dot(n) >= 0.0 ? away : Vec3(-away);
      }
    }
    return ee_from_object * r;
  };

  // Solutions depend only on the sample, so each is solved at most once.
  const std::size_t ns = object.samples.size();
  std::vector<double> nll_cache(ns, std::numeric_limits<double>::quiet_NaN());
  std::vector<Vec3> force_cache(ns);
  std::vector<Vec3> point_cache(ns);
  auto evaluate = [&](ContactParticle& p) {
    const int i = p.sample;
    if (std::isnan(nll_cache[i])) {
      point_cache[i] = contact_point(i);
      const ForceSolve sol = solve_contact_force(point_cache[i], gamma, noise);
      const Vec3 n = rot * object.samples.normals[i];
      nll_cache[i] = sol.nll + direction_penalty(sol.force, n, params.lambda_dir) +
                     friction_penalty(sol.force, n, params.mu, params.lambda_friction);
      force_cache[i] = sol.force;
    }
    p.nll = nll_cache[i];
    p.f = force_cache[i];
    p.r = point_cache[i];
  };

  std::vector<ContactParticle> particles(init.size());
  for (std::size_t k = 0; k < init.size(); ++k) {
    particles[k].sample = init[k].sample;
    particles[k].face_id = init[k].face;
  }
  const int n = static_cast<int>(particles.size());

  std::vector<int> hop_target;
  if (params.line_guided_hops && has_line) {
    hop_target.resize(object.faces.size());
    for (std::size_t f = 0; f < object.faces.size(); ++f) {
      double best = std::numeric_limits<double>::infinity();
      for (int i : object.faces.faces[f]) {
        const double dist = (ee_from_object * object.samples.points[i] - p0).cross(d).squaredNorm();
        if (dist < best) {
          best = dist;
          hop_target[f] = i;
        }
      }
    }
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any_face(0, object.faces.size() - 1);
  ContactBelief belief;
  int stall = 0;
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int step = 0; step < params.max_steps; ++step) {
    for (ContactParticle& p : particles) evaluate(p);
    const int best = normalize_scores(particles);
    const double best_nll = particles[best].nll;
    const double temperature = std::max(1.0, params.temper_start * std::pow(params.temper_rate, step));
    if (temperature == 1.0 && std::isfinite(belief.best_nll) && belief.best_nll - best_nll < params.tol_conv) {
      ++stall;
    } else {
      stall = 0;
    }
    belief.best_nll = std::min(belief.best_nll, best_nll);
    belief.steps_taken = step + 1;
    if (trace) {
      Vec3 m = Vec3::Zero();
      for (const ContactParticle& p : particles) m += p.s * p.r;
      trace->push_back({step, belief.best_nll, m});
    }
    if (stall >= params.patience) {
      belief.converged = true;
      break;
    }
    if (step + 1 == params.max_steps) break;

    if (temperature > 1.0) normalize_scores(particles, temperature);
    for (int k = 0; k < n; ++k) w[k] = particles[k].s;
    const std::vector<int> pick = systematic_resample(w, n, rng);
    std::vector<ContactParticle> next;
    next.reserve(static_cast<std::size_t>(n));
    if (params.elitism) {
      // Round-off decides between equally good contacts otherwise, which
      // biases mirror-symmetric cases towards one side.
      std::vector<int> tied;
      for (int k = 0; k < n; ++k) {
        if (particles[k].nll <= best_nll + kEliteTieTol) tied.push_back(k);
      }
      const int elite =
          tied.size() > 1 ? tied[std::uniform_int_distribution<std::size_t>(0, tied.size() - 1)(rng)] : best;
      next.push_back(particles[elite]);
    }
    for (int k = 0; static_cast<int>(next.size()) < n; ++k) next.push_back(particles[pick[k]]);

    for (int k = params.elitism ? 1 : 0; k < n; ++k) {
      ContactParticle& p = next[k];
      if (unit(rng) < params.local_move_prob) {
        const std::vector<int>& nb = object.neighbours[p.sample];
        if (!nb.empty()) p.sample = nb[std::uniform_int_distribution<std::size_t>(0, nb.size() - 1)(rng)];
      } else {
        const std::size_t f = any_face(rng);
        const std::vector<int>& members = object.faces.faces[f];
        p.sample = hop_target.empty()
                       ? members[std::uniform_int_distribution<std::size_t>(0, members.size() - 1)(rng)]
                       : hop_target[f];
        p.face_id = static_cast<int>(f);
      }
    }
    particles = std::move(next);
  }

  belief.particles = std::move(particles);
  return belief;
}

/// Score-weighted wrist-wrench error of a contact belief:
///   eps = sum_i s_i |[f_i; r_i x f_i] - gamma|.
inline double wrench_error(const ContactBelief& belief, const Wrench& gamma, WrenchNorm norm = WrenchNorm::kL1) {
  double e = 0.0;
  for (const ContactParticle& p : belief.particles) {
    e += p.s * wrench_distance(contact_wrench(p.r, p.f, gamma.frame), gamma, norm);
  }
  return e;
}

struct CpfMetrics {
  double position_error;  // m
  double wrench_error;
  int steps;
  int n_clp;
};

inline CpfMetrics cpf_metrics(const ContactBelief& belief, const Vec3& truth, const Wrench& gamma,
                              WrenchNorm norm = WrenchNorm::kL1) {
  return {(belief.mean_contact() - truth).norm(), wrench_error(belief, gamma, norm), belief.steps_taken,
          static_cast<int>(belief.size())};
}

}  // namespace multiscope
