#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "multiscope/multiscope.hpp"

namespace multiscope {

inline constexpr const char* kVersion = "multiscope 0.1.0";
inline constexpr const char* kSummarySchema = "multiscope.summary/1";

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1) standard deviation, 0 for n < 2
};

inline Stat stat(const std::vector<double>& v) {
  Stat s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() < 2) return s;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return s;
}

/// Error statistics over trials at one action index.
struct Summary {
  int trials = 0;
  Stat tool_trans_cm, tool_rot_deg, probe_trans_cm, probe_rot_deg;
  double success_rate = 0.0;
};

inline Summary summarize(const std::vector<TrialResult>& results, std::size_t action) {
  std::vector<double> tt, tr, pt, pr;
  int ok = 0;
  for (const TrialResult& r : results) {
    const ActionRecord& a = r.actions.at(action);
    tt.push_back(a.error_t.translation * 100.0);
    tr.push_back(a.error_t.rotation / kDeg);
    pt.push_back(a.error_p.translation * 100.0);
    pr.push_back(a.error_p.rotation / kDeg);
    ok += a.task_success ? 1 : 0;
  }
  Summary s;
  s.trials = static_cast<int>(results.size());
  s.tool_trans_cm = stat(tt);
  s.tool_rot_deg = stat(tr);
  s.probe_trans_cm = stat(pt);
  s.probe_rot_deg = stat(pr);
  s.success_rate = results.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(results.size());
  return s;
}

inline Summary summarize_final(const std::vector<TrialResult>& results) {
  return summarize(results, results.front().actions.size() - 1);
}

struct Manifest {
  std::string hash;
  std::string command;
  std::string tool;
  std::vector<std::uint64_t> seeds;
};

inline void write_manifest_line(std::ostream& out, const Manifest& m) { out << "# manifest " << m.hash << "\n"; }

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// One row per trial, action and object. Errors in cm and degrees.
inline void write_errors_csv(std::ostream& out, const Manifest& m, const std::vector<TrialResult>& results) {
  write_manifest_line(out, m);
  out << "trial,action,object,x_err,z_err,theta_err,trans_err_cm,rot_err_deg,task_success\n";
  for (std::size_t t = 0; t < results.size(); ++t) {
    for (const ActionRecord& a : results[t].actions) {
      for (int obj = 0; obj < 2; ++obj) {
        const PoseError& e = obj == 0 ? a.error_t : a.error_p;
        out << t << ',' << a.action << ',' << (obj == 0 ? "tool" : "probe") << ',' << num(e.dx * 100.0) << ','
            << num(e.dz * 100.0) << ',' << num(e.dtheta / kDeg) << ',' << num(e.translation * 100.0) << ','
            << num(e.rotation / kDeg) << ',';
        if (obj == 0) out << (a.task_success ? 1 : 0);
        out << '\n';
      }
    }
  }
}

inline void write_trace_csv(std::ostream& out, const Manifest& m, const std::vector<TrialResult>& results) {
  write_manifest_line(out, m);
  out << "trial,action,step,pair,L_P,L_C,L_F,L_Gamma,L_M,S_OPP,t_x,t_z,t_theta,p_x,p_z,p_theta\n";
  for (std::size_t t = 0; t < results.size(); ++t) {
    for (const ScopeTraceRow& r : results[t].trace) {
      out << t << ',' << r.action << ',' << r.step << ',' << r.pair << ',' << num(r.loss.p) << ',' << num(r.loss.c)
          << ',' << num(r.loss.f) << ',' << num(r.loss.gamma) << ',' << num(r.loss.m) << ',' << num(r.s_opp) << ','
          << num(r.pose_t.x) << ',' << num(r.pose_t.z) << ',' << num(r.pose_t.theta) << ',' << num(r.pose_p.x) << ','
          << num(r.pose_p.z) << ',' << num(r.pose_p.theta) << '\n';
    }
  }
}

inline void write_cloud_csv(std::ostream& out, const Manifest& m, const std::vector<TrialResult>& results) {
  write_manifest_line(out, m);
  out << "trial,object,action,x,y,z,weight,dropped\n";
  for (std::size_t t = 0; t < results.size(); ++t) {
    const MemoryState& mem = results[t].memory;
    for (int obj = 0; obj < 2; ++obj) {
      for (const CloudEntry& e : obj == 0 ? mem.cloud.tool : mem.cloud.probe) {
        out << t << ',' << (obj == 0 ? "tool" : "probe") << ',' << e.action << ',' << num(e.point.x()) << ','
            << num(e.point.y()) << ',' << num(e.point.z()) << ',' << num(e.weight) << ','
            << (mem.active(e.action) ? 0 : 1) << '\n';
      }
    }
  }
}

inline nlohmann::ordered_json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.std}}; }

inline nlohmann::ordered_json summary_json(const Summary& s) {
  nlohmann::ordered_json j;
  j["trials"] = s.trials;
  j["tool"] = {{"trans_err_cm", stat_json(s.tool_trans_cm)}, {"rot_err_deg", stat_json(s.tool_rot_deg)}};
  j["probe"] = {{"trans_err_cm", stat_json(s.probe_trans_cm)}, {"rot_err_deg", stat_json(s.probe_rot_deg)}};
  j["task_success_rate"] = s.success_rate;
  return j;
}

inline nlohmann::ordered_json manifest_json(const Manifest& m) {
  return {{"hash", m.hash}, {"command", m.command}, {"tool", m.tool}, {"seeds", m.seeds}, {"version", kVersion}};
}

/// Final-action statistics plus one block per action index.
inline nlohmann::ordered_json run_summary_json(const Manifest& m, const std::vector<TrialResult>& results) {
  nlohmann::ordered_json j;
  j["schema"] = kSummarySchema;
  j["manifest"] = manifest_json(m);
  j["actions"] = results.front().actions.size();
  j["final"] = summary_json(summarize_final(results));
  nlohmann::ordered_json per = nlohmann::ordered_json::array();
  for (std::size_t a = 0; a < results.front().actions.size(); ++a) {
    nlohmann::ordered_json row = summary_json(summarize(results, a));
    int drops = 0;
    for (const TrialResult& r : results) drops += r.actions[a].dropout ? 1 : 0;
    row["dropouts"] = drops;
    per.push_back({{"action", a}, {"stats", row}});
  }
  j["per_action"] = per;
  return j;
}

/// Ablation or sweep row: label plus mean and std of each error column.
inline const char* kTableHeader =
    "label,t_trans_mean_cm,t_trans_std_cm,t_rot_mean_deg,t_rot_std_deg,p_trans_mean_cm,p_trans_std_cm,"
    "p_rot_mean_deg,p_rot_std_deg,task_success_pct\n";

inline void write_table_row(std::ostream& out, const std::string& label, const Summary& s) {
  out << label << ',' << num(s.tool_trans_cm.mean) << ',' << num(s.tool_trans_cm.std) << ','
      << num(s.tool_rot_deg.mean) << ',' << num(s.tool_rot_deg.std) << ',' << num(s.probe_trans_cm.mean) << ','
      << num(s.probe_trans_cm.std) << ',' << num(s.probe_rot_deg.mean) << ',' << num(s.probe_rot_deg.std) << ','
      << num(100.0 * s.success_rate) << '\n';
}

/// Column-wise mean of several table rows (the "Mean" row of Table II).
inline Summary mean_row(const std::vector<Summary>& rows) {
  Summary m;
  const double n = static_cast<double>(rows.size());
  for (const Summary& s : rows) {
    m.trials += s.trials;
    m.tool_trans_cm.mean += s.tool_trans_cm.mean / n;
    m.tool_trans_cm.std += s.tool_trans_cm.std / n;
    m.tool_rot_deg.mean += s.tool_rot_deg.mean / n;
    m.tool_rot_deg.std += s.tool_rot_deg.std / n;
    m.probe_trans_cm.mean += s.probe_trans_cm.mean / n;
    m.probe_trans_cm.std += s.probe_trans_cm.std / n;
    m.probe_rot_deg.mean += s.probe_rot_deg.mean / n;
    m.probe_rot_deg.std += s.probe_rot_deg.std / n;
    m.success_rate += s.success_rate / n;
  }
  return m;
}

}  // namespace multiscope
