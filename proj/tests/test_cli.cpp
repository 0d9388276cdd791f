#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "common.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("multiscope_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + MULTISCOPE_CLI + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string cfg(const std::string& name) { return std::string(MULTISCOPE_SOURCE_DIR) + "/configs/" + name + ".cfg"; }

// The quick config with extra lines appended.
fs::path quick_with(const fs::path& dir, const std::string& extra) {
  const fs::path p = dir / "run.cfg";
  std::ofstream(p) << slurp(cfg("quick")) << extra;
  return p;
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream s(line);
    std::string c;
    while (std::getline(s, c, ',')) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    rows.push_back(cells);
  }
  return rows;
}

TEST(Cli, ExitCodes) {
  const fs::path d = scratch("exit");
  EXPECT_EQ(cli("run --config " + cfg("quick") + " --out " + (d / "ok").string()), 0);
  EXPECT_EQ(cli("run --config " + (d / "missing.cfg").string() + " --out " + d.string()), 2);
  EXPECT_EQ(cli("run --config " + quick_with(d, "filter.no_such_key = 1\n").string() + " --out " + d.string()), 2);
  EXPECT_EQ(cli("run --config " + quick_with(d, "run.asset_dir = " + (d / "nowhere").string() + "\n").string() +
                " --out " + d.string()),
            3);
  EXPECT_EQ(cli("run --out " + d.string()), 2);  // --config is required
}

TEST(Cli, OnlyPenetrationLossLeavesOtherColumnsZero) {
  const fs::path d = scratch("mask");
  const fs::path c = quick_with(d, "loss.eta_C = 0\nloss.eta_F = 0\nloss.eta_Gamma = 0\nloss.eta_M = 0\n");
  ASSERT_EQ(cli("run --trace --config " + c.string() + " --out " + (d / "out").string()), 0);
  const auto rows = csv_rows(d / "out" / "trace.csv");
  ASSERT_GT(rows.size(), 1u);
  ASSERT_EQ(rows[0][5], "L_C");
  ASSERT_EQ(rows[0][8], "L_M");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    for (int col = 5; col <= 8; ++col) EXPECT_EQ(std::stod(rows[i][col]), 0.0) << i << " " << rows[0][col];
  }
}

TEST(Cli, RerunIsByteIdenticalWhateverTheJobCount) {
  const fs::path d = scratch("rerun");
  for (const char* sub : {"a", "b"}) ASSERT_EQ(cli("run --config " + cfg("quick") + " --out " + (d / sub).string()), 0);
  ASSERT_EQ(cli("run --jobs 2 --config " + cfg("quick") + " --out " + (d / "c").string()), 0);
  for (const char* file : {"errors.csv", "summary.json"}) {
    const std::string a = slurp(d / "a" / file);
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(d / "b" / file)) << file;
    EXPECT_EQ(a, slurp(d / "c" / file)) << file;
  }
}

TEST(Cli, NoiseSweepLevelZeroEqualsRun) {
  const fs::path d = scratch("sweep");
  ASSERT_EQ(cli("run --config " + cfg("quick") + " --out " + (d / "run").string()), 0);
  ASSERT_EQ(cli("noise-sweep --levels 0,0.05,0.08 --config " + cfg("quick") + " --out " + (d / "sweep").string()), 0);
  EXPECT_EQ(slurp(d / "run" / "errors.csv"), slurp(d / "sweep" / "level_0" / "errors.csv"));
  EXPECT_EQ(slurp(d / "run" / "summary.json"), slurp(d / "sweep" / "level_0" / "summary.json"));
  for (const char* level : {"level_0", "level_1", "level_2"}) EXPECT_TRUE(fs::exists(d / "sweep" / level / "summary.json"));
  EXPECT_EQ(csv_rows(d / "sweep" / "noise_sweep.csv").size(), 4u);  // header + 3 levels
  EXPECT_NE(slurp(d / "sweep" / "level_0" / "errors.csv"), slurp(d / "sweep" / "level_1" / "errors.csv"));
}

TEST(Cli, AblationTablesHaveTheExpectedRows) {
  const fs::path d = scratch("ablate");
  ASSERT_EQ(cli("ablate --mode loss --config " + cfg("quick") + " --out " + d.string()), 0);
  ASSERT_EQ(cli("ablate --mode action --config " + cfg("quick") + " --out " + d.string()), 0);
  EXPECT_EQ(csv_rows(d / "ablation_loss.csv").size(), 1u + 9u);
  EXPECT_EQ(csv_rows(d / "ablation_action.csv").size(), 1u + 5u + 2u);
  EXPECT_EQ(cli("ablate --mode tools --config " + cfg("quick") + " --out " + d.string()), 2);
}

// Retention of the injected pair is scored by the acceptance binary; here we
// only check that the flag puts the zero pose into every initial population.
TEST(Cli, IncludeGtSeedsTheZeroPose) {
  const fs::path d = scratch("gt");
  ASSERT_EQ(cli("run --trace --include-gt --config " + cfg("quick") + " --out " + (d / "gt").string()), 0);
  ASSERT_EQ(cli("run --trace --config " + cfg("quick") + " --out " + (d / "plain").string()), 0);
  const auto count_zero = [](const fs::path& trace) {
    const auto rows = csv_rows(trace);
    std::map<std::string, int> col;
    for (std::size_t c = 0; c < rows[0].size(); ++c) col[rows[0][c]] = static_cast<int>(c);
    std::set<std::string> trials, seeded;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      trials.insert(r[col.at("trial")]);
      if (r[col.at("action")] != "0" || r[col.at("step")] != "0") continue;
      bool zero = true;
      for (const char* k : {"t_x", "t_z", "t_theta", "p_x", "p_z", "p_theta"}) zero = zero && std::stod(r[col.at(k)]) == 0.0;
      if (zero) seeded.insert(r[col.at("trial")]);
    }
    return std::pair{trials.size(), seeded.size()};
  };
  const auto [n, with] = count_zero(d / "gt" / "trace.csv");
  EXPECT_GT(n, 0u);
  EXPECT_EQ(with, n);
  EXPECT_EQ(count_zero(d / "plain" / "trace.csv").second, 0u);
}

}  // namespace
