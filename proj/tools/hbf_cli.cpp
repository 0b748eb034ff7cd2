// SPDX-License-Identifier: Apache-2.0
//
// hbf: run hybrid beamforming experiments from presets or config files.

#include <chrono>
#include <iostream>

#include <CLI11.hpp>

#include "hbf/harness.hpp"

namespace {

int report(const hbf::Error& e) {
  std::cerr << "error code=" << hbf::to_string(e.code()) << " message=\"" << e.what() << "\"\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid beamforming experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a scenario and write CSV");
  std::string config_path, preset_name, out_path;
  std::uint64_t seed = 0;
  hbf::Index trials = 0;
  std::size_t workers = 1;
  bool timing = false;
  auto* cfg_opt = run->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  auto* preset_opt = run->add_option("--preset", preset_name, "named preset");
  cfg_opt->excludes(preset_opt);
  preset_opt->excludes(cfg_opt);
  auto* seed_opt = run->add_option("--seed", seed, "master seed");
  auto* trials_opt = run->add_option("--trials", trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
  run->add_option("--out", out_path, "CSV path (default: the config's output, '-' for stdout)");
  run->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--timing", timing, "record wall-clock time per design");

  app.add_subcommand("list-presets", "print preset names");

  auto* validate = app.add_subcommand("validate", "check a config file");
  std::string validate_path;
  validate->add_option("--config", validate_path, "JSON config file")->required();

  auto* show = app.add_subcommand("show-preset", "print a preset as a JSON config");
  std::string show_name;
  show->add_option("name", show_name, "preset name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("list-presets")) {
      for (const auto& name : hbf::preset_names()) std::cout << name << '\t' << hbf::preset(name).note << '\n';
      return 0;
    }
    if (app.got_subcommand(show)) {
      std::cout << hbf::config_to_json(hbf::preset(show_name)).dump(2) << '\n';
      return 0;
    }
    if (app.got_subcommand(validate)) {
      const auto c = hbf::load_config(validate_path);
      std::cout << "ok " << c.scenario << '\n';
      return 0;
    }

    if (config_path.empty() && preset_name.empty()) {
      std::cerr << "error code=InvalidConfig message=\"run needs --config or --preset\"\n";
      return 2;
    }
    auto config = config_path.empty() ? hbf::preset(preset_name) : hbf::load_config(config_path);
    if (*seed_opt) config.seed = seed;
    if (*trials_opt) config.trials = trials;
    if (!out_path.empty()) config.output = out_path;

    const auto start = std::chrono::steady_clock::now();
    const auto result = hbf::run_scenario(config, {workers, timing});
    for (const auto& line : result.failures) std::cerr << "warning " << line << '\n';
    if (config.output.empty() || config.output == "-") {
      std::cout << hbf::to_csv(result.records);
    } else {
      hbf::write_csv(result.records, config.output);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::cerr << "wrote " << result.records.size() << " rows to " << config.output << " in " << secs << " s\n";
    }
  } catch (const hbf::Error& e) {
    return report(e);
  }
  return 0;
}
