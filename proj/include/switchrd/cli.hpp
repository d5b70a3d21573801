#pragma once

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "switchrd/commands.hpp"
#include "switchrd/version.hpp"

namespace switchrd {

// Exit codes: 0 success, 1 numerical failure, 2 configuration error.
inline int cli_main(std::vector<std::string> args) {
  CLI::App app{"switchrd: switching reaction-diffusion predator-prey toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string example_id;
  std::string in_csv;
  std::string cloud_csv;
  std::optional<std::uint64_t> seed;
  int workers = 1;

  auto add_common = [&](CLI::App* cmd, bool with_config) {
    if (with_config) {
      cmd->add_option("--config", config_path, "run configuration JSON")->required();
    }
    cmd->add_option("--out", out_dir, "output directory (default: config output_dir)");
    cmd->add_option("--seed", seed, "override the config seed");
    cmd->add_option("--workers", workers, "worker threads for sweeps and Monte Carlo")
        ->check(CLI::PositiveNumber);
  };

  auto* threshold_cmd =
      app.add_subcommand("threshold", "compute the threshold lambda and classification");
  add_common(threshold_cmd, true);
  auto* simulate_cmd =
      app.add_subcommand("simulate", "run the hybrid PDE pipeline and analysis");
  add_common(simulate_cmd, true);
  auto* reproduce_cmd =
      app.add_subcommand("reproduce", "rerun a bundled example setup (5.2 or 5.3)");
  reproduce_cmd->add_option("example", example_id, "example id: 5.2 or 5.3")->required();
  add_common(reproduce_cmd, false);
  auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep of lambda/classification");
  add_common(sweep_cmd, true);
  auto* analyze_cmd = app.add_subcommand("analyze", "re-run analysis on stored CSVs");
  analyze_cmd->add_option("--in", in_csv, "snapshot CSV produced by simulate")->required();
  analyze_cmd->add_option("--cloud", cloud_csv, "omega cloud CSV for distance analysis");
  analyze_cmd->add_option("--out", out_dir, "output directory")->required();

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    std::cout << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    auto load = [&]() {
      RunConfig cfg = load_config(config_path);
      if (seed) {
        cfg.raw["seed"] = *seed;
        cfg = parse_config(cfg.raw);
      }
      if (out_dir.empty()) out_dir = cfg.output_dir;
      return cfg;
    };
    if (threshold_cmd->parsed()) {
      cmd_threshold(load(), out_dir, workers);
    } else if (simulate_cmd->parsed()) {
      cmd_simulate(load(), out_dir, workers);
    } else if (reproduce_cmd->parsed()) {
      if (out_dir.empty()) out_dir = "out";
      cmd_reproduce(example_id, out_dir, workers, seed);
    } else if (sweep_cmd->parsed()) {
      cmd_sweep(load(), out_dir, workers);
    } else if (analyze_cmd->parsed()) {
      std::optional<std::filesystem::path> cloud;
      if (!cloud_csv.empty()) cloud = cloud_csv;
      cmd_analyze(in_csv, out_dir, cloud);
    }
  } catch (const config_error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace switchrd
