#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "multiscope/config.hpp"
#include "multiscope/multiscope.hpp"
#include "multiscope/object_model.hpp"
#include "multiscope/parallel.hpp"
#include "multiscope/report.hpp"

namespace multiscope {

namespace fs = std::filesystem;

struct Objects {
  std::shared_ptr<const ObjectModel> tool;
  std::shared_ptr<const ObjectModel> probe;
};

inline std::string asset_path(const RunConfig& c, const std::string& name) {
  return (fs::path(c.asset_dir) / (name + ".off")).string();
}

inline TriMesh load_asset(const RunConfig& c, const std::string& name) {
  const std::string path = asset_path(c, name);
  if (!fs::exists(path)) throw AssetError("missing asset " + path + " (run `multiscope assets` first)");
  try {
    return load_mesh(path);
  } catch (const MeshError& e) {
    throw AssetError("bad asset " + path + ": " + e.what());
  }
}

inline std::shared_ptr<const ObjectModel> load_object(const RunConfig& c, const std::string& name,
                                                      std::uint64_t sample_seed) {
  return make_object_model(name, load_asset(c, name), c.density, c.seg_for(name), sample_seed);
}

inline Objects load_objects(const RunConfig& c) {
  return {load_object(c, c.tool, c.sample_seed), load_object(c, "probe", c.sample_seed + 1)};
}

inline std::vector<PokeAction> build_actions(const RunConfig& c, const TriMesh& tool_mesh) {
  if (c.actions == "curated") return curated_actions(c.tool);
  const int n = static_cast<int>(cfgdetail::to_int("run.actions", c.actions.substr(7)));
  std::vector<PokeAction> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(generate_action(c.tool, tool_mesh, ActionStrategy::kRandom,
                                  derive_seed(c.seed, {tag(Stream::kAction), static_cast<std::uint64_t>(i)})));
  }
  return out;
}

struct TrialOptions {
  bool include_gt = false;
  bool trace = false;
  int jobs = 1;
};

/// Independent trials, seeds seed + t; results are in trial order whatever
/// the job count.
inline std::vector<TrialResult> run_trials(const RunConfig& c, const Objects& obj, const std::vector<PokeAction>& actions,
                                           const TrialOptions& opt) {
  std::vector<TrialResult> results(static_cast<std::size_t>(c.trials));
  const std::vector<std::uint64_t> seeds = c.seeds();
  parallel_for(c.trials, opt.jobs, [&](int t) {
    TrialSpec spec;
    spec.tool = c.tool;
    spec.actions = actions;
    spec.seed = seeds[t];
    spec.noise = c.noise;
    spec.filter = c.filter;
    spec.filter.jobs = 1;
    spec.task = c.task_spec();
    spec.include_gt = opt.include_gt;
    results[t] = run_trial(*obj.tool, *obj.probe, spec, opt.trace);
  });
  return results;
}

inline Manifest make_manifest(const RunConfig& c, const std::string& command, const std::string& extra = {}) {
  const std::string text = canonical_config(c) + "command = " + command + "\n" + extra;
  return {hex64(fnv1a(text)), command, c.tool, c.seeds()};
}

inline void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
}

template <class Fn>
void write_file(const fs::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  fn(out);
}

/// Writes errors.csv and summary.json (plus trace.csv and cloud.csv when
/// traced) for one set of trials.
inline void write_run_outputs(const fs::path& dir, const Manifest& m, const std::vector<TrialResult>& results,
                              bool trace) {
  fs::create_directories(dir);
  write_file(dir / "errors.csv", [&](std::ostream& o) { write_errors_csv(o, m, results); });
  write_text(dir / "summary.json", run_summary_json(m, results).dump(2) + "\n");
  if (trace) {
    write_file(dir / "trace.csv", [&](std::ostream& o) { write_trace_csv(o, m, results); });
    write_file(dir / "cloud.csv", [&](std::ostream& o) { write_cloud_csv(o, m, results); });
  }
}

inline Manifest run_manifest(const RunConfig& c, const TrialOptions& opt) {
  return make_manifest(c, "run", std::string("include_gt = ") + (opt.include_gt ? "true" : "false") + "\n");
}

inline std::vector<TrialResult> cmd_run(const RunConfig& c, const fs::path& out, const TrialOptions& opt) {
  const Objects obj = load_objects(c);
  const std::vector<TrialResult> results = run_trials(c, obj, build_actions(c, obj.tool->mesh()), opt);
  write_run_outputs(out, run_manifest(c, opt), results, opt.trace);
  return results;
}

struct LossRow {
  std::string label;
  LossWeights weights;
  bool memory;
};

/// Loss ablation rows: each loss alone, the three-loss base, base + L_Gamma,
/// base + L_M, and the full method. Disabled losses get zero weight.
inline std::vector<LossRow> loss_ablation_rows(const LossWeights& full) {
  auto pick = [&](bool p, bool c, bool f, bool g, bool m) {
    LossWeights w;
    w.p = p ? full.p : 0.0;
    w.c = c ? full.c : 0.0;
    w.f = f ? full.f : 0.0;
    w.gamma = g ? full.gamma : 0.0;
    w.m = m ? full.m : 0.0;
    return w;
  };
  return {
      {"L_P", pick(1, 0, 0, 0, 0), false},
      {"L_C", pick(0, 1, 0, 0, 0), false},
      {"L_F", pick(0, 0, 1, 0, 0), false},
      {"L_Gamma", pick(0, 0, 0, 1, 0), false},
      {"L_M", pick(0, 0, 0, 0, 1), true},
      {"L_P+L_C+L_F", pick(1, 1, 1, 0, 0), false},
      {"L_P+L_C+L_F+L_Gamma", pick(1, 1, 1, 1, 0), false},
      {"L_P+L_C+L_F+L_M", pick(1, 1, 1, 0, 1), true},
      {"full", pick(1, 1, 1, 1, 1), true},
  };
}

struct TableRow {
  std::string label;
  Summary summary;
};

inline std::vector<TableRow> ablate_loss(const RunConfig& c, const Objects& obj, const TrialOptions& opt,
                                         std::vector<std::vector<TrialResult>>* runs = nullptr) {
  const std::vector<PokeAction> actions = build_actions(c, obj.tool->mesh());
  std::vector<TableRow> rows;
  for (const LossRow& r : loss_ablation_rows(c.filter.weights)) {
    RunConfig v = c;
    v.filter.weights = r.weights;
    v.filter.memory = r.memory;
    std::vector<TrialResult> res = run_trials(v, obj, actions, opt);
    rows.push_back({r.label, summarize_final(res)});
    if (runs) runs->push_back(std::move(res));
  }
  return rows;
}

/// Table II rows: every action alone, their column mean, and the full
/// sequence.
inline std::vector<TableRow> ablate_action(const RunConfig& c, const Objects& obj, const TrialOptions& opt) {
  const std::vector<PokeAction> actions = build_actions(c, obj.tool->mesh());
  std::vector<TableRow> rows;
  std::vector<Summary> singles;
  for (std::size_t a = 0; a < actions.size(); ++a) {
    const Summary s = summarize_final(run_trials(c, obj, {actions[a]}, opt));
    singles.push_back(s);
    rows.push_back({std::to_string(a + 1), s});
  }
  rows.push_back({"mean", mean_row(singles)});
  rows.push_back({"full", summarize_final(run_trials(c, obj, actions, opt))});
  return rows;
}

inline void write_table(const fs::path& path, const Manifest& m, const std::vector<TableRow>& rows) {
  write_file(path, [&](std::ostream& o) {
    write_manifest_line(o, m);
    o << kTableHeader;
    for (const TableRow& r : rows) write_table_row(o, r.label, r.summary);
  });
}

inline nlohmann::ordered_json table_json(const Manifest& m, const std::string& kind,
                                         const std::vector<TableRow>& rows) {
  nlohmann::ordered_json j;
  j["schema"] = "multiscope.table/1";
  j["manifest"] = manifest_json(m);
  j["table"] = kind;
  j["rows"] = nlohmann::ordered_json::array();
  for (const TableRow& r : rows) {
    nlohmann::ordered_json row = summary_json(r.summary);
    row["label"] = r.label;
    j["rows"].push_back(row);
  }
  return j;
}

inline std::vector<TableRow> cmd_ablate(const RunConfig& c, const std::string& mode, const fs::path& out,
                                        const TrialOptions& opt) {
  if (mode != "loss" && mode != "action") throw ConfigError("ablate: mode must be loss or action");
  const Objects obj = load_objects(c);
  const std::vector<TableRow> rows = mode == "loss" ? ablate_loss(c, obj, opt) : ablate_action(c, obj, opt);
  const Manifest m = make_manifest(c, "ablate", "mode = " + mode + "\n");
  fs::create_directories(out);
  write_table(out / ("ablation_" + mode + ".csv"), m, rows);
  write_text(out / ("ablation_" + mode + ".json"), table_json(m, mode, rows).dump(2) + "\n");
  return rows;
}

/// One full run per noise level under level_<i>/, plus a level-indexed table.
/// Each level's files carry the manifest of the equivalent `run`.
inline std::vector<TableRow> cmd_noise_sweep(const RunConfig& c, const std::vector<double>& levels,
                                             const fs::path& out, const TrialOptions& opt) {
  if (levels.empty()) throw ConfigError("noise-sweep: no levels");
  for (double l : levels) {
    if (!(l >= 0.0)) throw ConfigError("noise-sweep: levels must be non-negative");
  }
  const Objects obj = load_objects(c);
  const std::vector<PokeAction> actions = build_actions(c, obj.tool->mesh());
  std::vector<TableRow> rows;
  std::string extra = "levels =";
  for (std::size_t i = 0; i < levels.size(); ++i) {
    RunConfig v = c;
    v.noise.fraction = levels[i];
    const std::vector<TrialResult> res = run_trials(v, obj, actions, opt);
    write_run_outputs(out / ("level_" + std::to_string(i)), run_manifest(v, opt), res, opt.trace);
    rows.push_back({num(levels[i]), summarize_final(res)});
    extra += " " + num(levels[i]);
  }
  const Manifest m = make_manifest(c, "noise-sweep", extra + "\n");
  write_table(out / "noise_sweep.csv", m, rows);
  write_text(out / "noise_sweep.json", table_json(m, "noise", rows).dump(2) + "\n");
  return rows;
}

/// Face-labelled samples of one object (face_id -1 marks DBSCAN noise).
inline void write_segmentation_csv(std::ostream& out, const Manifest& m, const ObjectModel& obj) {
  write_manifest_line(out, m);
  out << "x,y,z,nx,ny,nz,face_id\n";
  for (std::size_t i = 0; i < obj.samples.size(); ++i) {
    const Vec3& p = obj.samples.points[i];
    const Vec3& n = obj.samples.normals[i];
    out << num(p.x()) << ',' << num(p.y()) << ',' << num(p.z()) << ',' << num(n.x()) << ',' << num(n.y()) << ','
        << num(n.z()) << ',' << obj.faces.face_of[i] << '\n';
  }
}

inline std::shared_ptr<const ObjectModel> cmd_segment(const RunConfig& c, const std::string& object,
                                                      const fs::path& out) {
  const std::string name = object.empty() ? c.tool : object;
  c.seg_for(name);
  const auto model = load_object(c, name, name == "probe" ? c.sample_seed + 1 : c.sample_seed);
  const Manifest m = make_manifest(c, "segment", "object = " + name + "\n");
  fs::create_directories(out);
  write_file(out / ("segment_" + name + ".csv"), [&](std::ostream& o) { write_segmentation_csv(o, m, *model); });
  return model;
}

inline std::vector<std::string> asset_names() { return {"wrench", "hexkey", "pawl", "gear", "probe", "cube"}; }

inline void cmd_assets(const fs::path& out) {
  fs::create_directories(out);
  for (const std::string& name : asset_names()) save_mesh((out / (name + ".off")).string(), make_tool_mesh(name));
}

}  // namespace multiscope
