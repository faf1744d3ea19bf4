#include "cli_commands.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>

#include <cstdlib>
#include <iostream>

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("vgswarm");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("VGSWARM_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
}

void add_common(CLI::App* cmd, vgswarm::cli::CommonOptions& o) {
  cmd->add_option("scenario", o.scenario_file, "Scenario JSON file");
  cmd->add_option("--preset", o.preset, "Built-in scenario instead of a file");
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--out-dir", o.out_dir, "Output directory (created if absent)");
  cmd->add_flag("--force", o.force, "Overwrite existing output files");
  cmd->add_option("--profile", o.profile, "Max-speed profile: sim (5 m/s) or real (1 m/s)")
      ->check(CLI::IsMember({"sim", "real"}));
  cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--latency-ticks", o.latency_ticks, "Perception latency in ticks")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--strict-success", o.strict_success, "Require two stopped captors per sector");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace vgswarm::cli;
  setup_logging();

  CLI::App app{"Vision-based GRN swarm entrapment simulator"};
  app.require_subcommand(1);

  CommonOptions cal_opts;
  auto* cal = app.add_subcommand("calibrate", "Fit per-kind distance power laws from the approach maneuver");
  add_common(cal, cal_opts);

  RunCommandOptions run_opts;
  auto* run = app.add_subcommand("run", "Run one scenario and write its logs and report");
  add_common(run, run_opts.common);
  run->add_flag("--dump-fields", run_opts.dump_fields, "Write agent 0's fields every tick");

  BatchCommandOptions batch_opts;
  auto* batch = app.add_subcommand("batch", "Run seeds per initial distance and write a success-rate table");
  add_common(batch, batch_opts.common);
  batch->add_option("--seeds", batch_opts.seeds, "Runs per distance")->check(CLI::PositiveNumber);
  batch->add_option("--distances", batch_opts.distances, "Initial mean distances, m")->delimiter(',');
  batch->add_option("--checkpoints", batch_opts.checkpoints, "Table checkpoints, s")->delimiter(',');

  std::string export_name, export_path;
  bool export_force = false;
  auto* exp = app.add_subcommand("export", "Write a built-in scenario as JSON");
  exp->add_option("preset", export_name, "Preset name")->required();
  exp->add_option("file", export_path, "Output file")->required();
  exp->add_flag("--force", export_force, "Overwrite an existing file");

  app.add_subcommand("presets", "List built-in scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*cal) return cmd_calibrate(cal_opts);
    if (*run) return cmd_run(run_opts);
    if (*batch) return cmd_batch(batch_opts);
    if (*exp) return cmd_export(export_name, export_path, export_force);
    for (const auto& n : vgswarm::preset_names()) std::cout << n << '\n';
    return kOk;
  } catch (const CliError& e) {
    spdlog::error("{}", e.what());
    if (e.code() == kUsage) std::cerr << app.get_subcommands().front()->help();
    return e.code();
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
}
