#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "multiscope/scope.hpp"
#include "multiscope/segmentation.hpp"
#include "multiscope/sim.hpp"
#include "multiscope/wrench.hpp"

#ifndef MULTISCOPE_ASSET_DIR
#define MULTISCOPE_ASSET_DIR "assets"
#endif

namespace multiscope {

inline constexpr int kExitConfig = 2;
inline constexpr int kExitAsset = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AssetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Everything one run depends on. Loaded from flat `key = value` text.
struct RunConfig {
  std::string tool = "wrench";
  int trials = 10;
  std::uint64_t seed = 100;  // trial t uses seed + t
  std::string actions = "curated";  // or random:N
  double density = 1e6;             // surface samples per m^2
  std::uint64_t sample_seed = 11;
  std::string task = "tight";  // tight | loose
  std::string asset_dir = MULTISCOPE_ASSET_DIR;
  NoiseSpec noise;
  FilterConfig filter;
  double sigma_force = 0.05;
  double sigma_torque = 0.005;
  std::string sensor_capture;  // optional static capture CSV
  std::map<std::string, SegmentationParams> seg;

  RunConfig() {
    for (const char* name : {"wrench", "hexkey", "pawl", "gear", "probe", "cube"}) seg[name] = {};
  }

  const SegmentationParams& seg_for(const std::string& object) const {
    auto it = seg.find(object);
    if (it == seg.end()) throw ConfigError("no segmentation parameters for " + object);
    return it->second;
  }

  TaskSpec task_spec() const { return task == "loose" ? TaskSpec::loose() : TaskSpec::tight(); }

  std::vector<std::uint64_t> seeds() const {
    std::vector<std::uint64_t> out;
    for (int t = 0; t < trials; ++t) out.push_back(seed + static_cast<std::uint64_t>(t));
    return out;
  }
};

namespace cfgdetail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

inline long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

struct Field {
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

inline Field real(const std::string& key, double& x, double scale = 1.0) {
  return {[&x, key, scale](const std::string& v) { x = to_double(key, v) * scale; },
          [&x, scale] { return fmt(x / scale); }};
}

template <class Int>
Field integer(const std::string& key, Int& x) {
  return {[&x, key](const std::string& v) { x = static_cast<Int>(to_int(key, v)); },
          [&x] { return std::to_string(x); }};
}

inline Field flag(const std::string& key, bool& x) {
  return {[&x, key](const std::string& v) { x = to_bool(key, v); }, [&x] { return std::string(x ? "true" : "false"); }};
}

inline Field text(std::string& x) {
  return {[&x](const std::string& v) { x = v; }, [&x] { return x; }};
}

/// Key table bound to one RunConfig.
inline std::map<std::string, Field> fields(RunConfig& c) {
  std::map<std::string, Field> f;
  f["run.tool"] = text(c.tool);
  f["run.trials"] = integer("run.trials", c.trials);
  f["run.seed"] = integer("run.seed", c.seed);
  f["run.actions"] = text(c.actions);
  f["run.density"] = real("run.density", c.density);
  f["run.sample_seed"] = integer("run.sample_seed", c.sample_seed);
  f["run.task"] = text(c.task);
  f["run.asset_dir"] = text(c.asset_dir);
  f["noise.fraction"] = real("noise.fraction", c.noise.fraction);

  FilterConfig& k = c.filter;
  f["filter.N_opp"] = integer("filter.N_opp", k.n_opp);
  f["filter.N_os"] = integer("filter.N_os", k.n_os);
  f["filter.n_top"] = integer("filter.n_top", k.n_top);
  f["filter.eps_pp"] = real("filter.eps_pp", k.eps_pp);
  f["filter.beta"] = real("filter.beta", k.beta);
  f["filter.delta_c"] = real("filter.delta_c", k.delta_c);
  f["filter.x_max"] = real("filter.x_max", k.x_max);
  f["filter.z_max"] = real("filter.z_max", k.z_max);
  f["filter.theta_max_deg"] = real("filter.theta_max_deg", k.theta_max, kDeg);
  f["filter.memory"] = flag("filter.memory", k.memory);
  f["filter.penetration_margin"] = real("filter.penetration_margin", k.penetration_margin);
  f["filter.symmetric_penetration"] = flag("filter.symmetric_penetration", k.symmetric_penetration);

  f["loss.eta_P"] = real("loss.eta_P", k.weights.p);
  f["loss.eta_C"] = real("loss.eta_C", k.weights.c);
  f["loss.eta_F"] = real("loss.eta_F", k.weights.f);
  f["loss.eta_Gamma"] = real("loss.eta_Gamma", k.weights.gamma);
  f["loss.eta_M"] = real("loss.eta_M", k.weights.m);

  f["noise_model.sigma_x"] = real("noise_model.sigma_x", k.noise.sigma_x);
  f["noise_model.sigma_z"] = real("noise_model.sigma_z", k.noise.sigma_z);
  f["noise_model.sigma_theta_deg"] = real("noise_model.sigma_theta_deg", k.noise.sigma_theta, kDeg);
  f["noise_model.gamma_a"] = real("noise_model.gamma_a", k.noise.gamma_a);
  f["noise_model.rho_base"] = real("noise_model.rho_base", k.noise.rho_base);
  f["noise_model.rho_floor"] = real("noise_model.rho_floor", k.noise.rho_floor);
  f["noise_model.boost"] = real("noise_model.boost", k.noise.boost);

  CpfParams& p = k.cpf;
  f["cpf.init"] = {[&p](const std::string& v) {
                     if (v == "segmented") p.init = ClpInit::kSegmented;
                     else if (v == "uniform") p.init = ClpInit::kUniform;
                     else throw ConfigError("cpf.init: expected segmented or uniform, got '" + v + "'");
                   },
                   [&p] { return std::string(p.init == ClpInit::kSegmented ? "segmented" : "uniform"); }};
  f["cpf.n_clp"] = integer("cpf.n_clp", p.n_clp);
  f["cpf.max_steps"] = integer("cpf.max_steps", p.max_steps);
  f["cpf.tol_conv"] = real("cpf.tol_conv", p.tol_conv);
  f["cpf.patience"] = integer("cpf.patience", p.patience);
  f["cpf.elitism"] = flag("cpf.elitism", p.elitism);
  f["cpf.local_move_prob"] = real("cpf.local_move_prob", p.local_move_prob);
  f["cpf.lambda_dir"] = real("cpf.lambda_dir", p.lambda_dir);
  f["cpf.mu"] = real("cpf.mu", p.mu);
  f["cpf.lambda_friction"] = real("cpf.lambda_friction", p.lambda_friction);
  f["cpf.temper_start"] = real("cpf.temper_start", p.temper_start);
  f["cpf.temper_rate"] = real("cpf.temper_rate", p.temper_rate);
  f["cpf.line_guided_hops"] = flag("cpf.line_guided_hops", p.line_guided_hops);
  f["cpf.refine_radius"] = real("cpf.refine_radius", p.refine_radius);
  f["cpf.norm"] = {[&p](const std::string& v) {
                     if (v == "l1") p.norm = WrenchNorm::kL1;
                     else if (v == "l2") p.norm = WrenchNorm::kL2;
                     else throw ConfigError("cpf.norm: expected l1 or l2, got '" + v + "'");
                   },
                   [&p] { return std::string(p.norm == WrenchNorm::kL1 ? "l1" : "l2"); }};

  f["sensor.sigma_force"] = real("sensor.sigma_force", c.sigma_force);
  f["sensor.sigma_torque"] = real("sensor.sigma_torque", c.sigma_torque);
  f["sensor.capture"] = text(c.sensor_capture);

  for (auto& [name, s] : c.seg) {
    const std::string pre = "seg." + name + ".";
    f[pre + "n_clusters"] = integer(pre + "n_clusters", s.n_clusters);
    f[pre + "epsilon"] = real(pre + "epsilon", s.epsilon);
    f[pre + "n_min"] = integer(pre + "n_min", s.n_min);
    f[pre + "N_face"] = integer(pre + "N_face", s.n_face);
    f[pre + "seed"] = integer(pre + "seed", s.seed);
  }
  return f;
}

}  // namespace cfgdetail

inline void validate(const RunConfig& c) {
  const auto& names = tool_names();
  if (std::find(names.begin(), names.end(), c.tool) == names.end()) throw ConfigError("run.tool: unknown tool " + c.tool);
  if (c.trials < 1) throw ConfigError("run.trials must be positive");
  if (!(c.density > 0.0)) throw ConfigError("run.density must be positive");
  if (c.task != "tight" && c.task != "loose") throw ConfigError("run.task: expected tight or loose");
  if (c.noise.fraction < 0.0) throw ConfigError("noise.fraction must be non-negative");
  if (!(c.sigma_force > 0.0 && c.sigma_torque > 0.0)) throw ConfigError("sensor sigmas must be positive");
  if (c.actions != "curated") {
    if (c.actions.rfind("random:", 0) != 0) throw ConfigError("run.actions: expected curated or random:N");
    if (cfgdetail::to_int("run.actions", c.actions.substr(7)) < 1) throw ConfigError("run.actions: N must be positive");
  }
  try {
    c.filter.validate();
    for (const auto& [name, s] : c.seg) s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

/// Parses `key = value` lines; '#' starts a comment. Unknown or repeated
/// keys are errors.
inline RunConfig parse_config(std::istream& in, RunConfig c = {}) {
  auto table = cfgdetail::fields(c);
  std::map<std::string, int> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = cfgdetail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = cfgdetail::trim(line.substr(0, eq));
    const std::string value = cfgdetail::trim(line.substr(eq + 1));
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key " + key);
    if (seen.count(key)) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + key + " already set on line " +
                        std::to_string(seen[key]));
    }
    seen[key] = lineno;
    it->second.set(value);
  }
  validate(c);
  c.filter.sensor = SensorNoise(c.sigma_force, c.sigma_torque);
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

/// Reads a config file; a configured static capture replaces the sigmas.
inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  RunConfig c = parse_config(in);
  if (!c.sensor_capture.empty()) {
    std::ifstream cap(c.sensor_capture);
    if (!cap) throw AssetError("missing static capture " + c.sensor_capture);
    try {
      c.filter.sensor = fit_sensor_noise(cap);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("static capture: ") + e.what());
    }
  }
  return c;
}

/// Every key with its resolved value, sorted; the manifest hash covers this.
inline std::string canonical_config(const RunConfig& c) {
  RunConfig copy = c;
  std::string out;
  for (const auto& [key, field] : cfgdetail::fields(copy)) out += key + " = " + field.get() + "\n";
  return out;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace multiscope
