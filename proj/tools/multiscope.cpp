#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "multiscope/experiment.hpp"

using namespace multiscope;

namespace {

void print_row(const TableRow& r) {
  const Summary& s = r.summary;
  std::printf("%-22s tool %.3f +- %.3f cm  %.2f +- %.2f deg | probe %.3f +- %.3f cm | success %.0f%%\n",
              r.label.c_str(), s.tool_trans_cm.mean, s.tool_trans_cm.std, s.tool_rot_deg.mean, s.tool_rot_deg.std,
              s.probe_trans_cm.mean, s.probe_trans_cm.std, 100.0 * s.success_rate);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MultiSCOPE bimanual in-hand pose estimation"};
  app.require_subcommand(1);

  std::string config;
  std::string out = "out";
  TrialOptions opt;
  std::string mode = "loss";
  std::vector<double> levels = {0.0, 0.05, 0.08};
  std::string object;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "run config file")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--jobs", opt.jobs, "parallel trials")->check(CLI::PositiveNumber);
    sub->add_flag("--trace", opt.trace, "also write per-step trace and contact cloud");
    sub->add_flag("--include-gt", opt.include_gt, "seed the ground-truth pair into the initial population");
  };
  CLI::App* run = app.add_subcommand("run", "run trials of the full pipeline");
  common(run);
  CLI::App* ablate = app.add_subcommand("ablate", "loss or action ablation tables");
  common(ablate);
  ablate->add_option("--mode", mode, "loss | action")->check(CLI::IsMember({"loss", "action"}));
  CLI::App* sweep = app.add_subcommand("noise-sweep", "one run per wrench-noise level");
  common(sweep);
  sweep->add_option("--levels", levels, "noise fractions, e.g. 0 0.05 0.08")->delimiter(',');
  CLI::App* segment = app.add_subcommand("segment", "face-labelled surface samples as CSV");
  segment->add_option("--config", config, "run config file")->required();
  segment->add_option("--out", out, "output directory");
  segment->add_option("--object", object, "object to segment (default: the configured tool)");
  CLI::App* assets = app.add_subcommand("assets", "write the procedural meshes as OFF files");
  assets->add_option("--out", out, "asset directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (assets->parsed()) {
      cmd_assets(out);
      std::cout << "wrote " << asset_names().size() << " meshes to " << out << "\n";
      return 0;
    }
    const RunConfig cfg = load_config(config);
    if (run->parsed()) {
      const auto results = cmd_run(cfg, out, opt);
      print_row({cfg.tool, summarize_final(results)});
    } else if (ablate->parsed()) {
      for (const TableRow& r : cmd_ablate(cfg, mode, out, opt)) print_row(r);
    } else if (sweep->parsed()) {
      for (const TableRow& r : cmd_noise_sweep(cfg, levels, out, opt)) print_row(r);
    } else if (segment->parsed()) {
      const auto model = cmd_segment(cfg, object, out);
      std::cout << model->name << ": " << model->samples.size() << " samples, " << model->faces.size()
                << " faces, " << model->faces.noise.size() << " noise points\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const AssetError& e) {
    std::cerr << "asset error: " << e.what() << "\n";
    return kExitAsset;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
