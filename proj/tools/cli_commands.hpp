#pragma once

// Subcommand implementations behind the vgswarm binary. Each returns the
// process exit code; usage problems surface as CliError with code 2.

#include "vgswarm/metrics.hpp"
#include "vgswarm/presets.hpp"
#include "vgswarm/scenario_io.hpp"

#include <spdlog/spdlog.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace vgswarm::cli {

namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kNoSuccess = 3 };

class CliError : public std::runtime_error {
 public:
  CliError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const noexcept { return code_; }

 private:
  int code_;
};

struct CommonOptions {
  std::string scenario_file;
  std::string preset;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  bool force = false;
  std::string profile = "sim";
  int threads = 1;
  int latency_ticks = 0;
  bool strict_success = false;
};

inline Scenario load_input(const CommonOptions& o) {
  if (o.scenario_file.empty() == o.preset.empty())
    throw CliError(kUsage, "give exactly one of a scenario file or --preset");
  Scenario s;
  try {
    if (!o.preset.empty()) {
      s = preset(o.preset);
    } else {
      if (!fs::exists(o.scenario_file)) throw CliError(kUsage, "scenario file not found: " + o.scenario_file);
      s = load_scenario(o.scenario_file);
    }
  } catch (const ScenarioError& e) {
    throw CliError(kUsage, e.what());
  }
  if (o.profile == "real") {
    for (auto& c : s.captors) c.max_speed = 1.0;
  } else if (o.profile != "sim") {
    throw CliError(kUsage, "unknown profile: " + o.profile);
  }
  try {
    validate(s);
  } catch (const ScenarioError& e) {
    throw CliError(kUsage, e.what());
  }
  return s;
}

/// Output directory that refuses to replace existing files unless forced.
class OutputDir {
 public:
  OutputDir(fs::path root, bool force) : root_(std::move(root)), force_(force) {}

  /// Fails before anything is written if one of `names` already exists.
  void claim(const std::vector<std::string>& names) const {
    if (force_) return;
    for (const auto& n : names)
      if (fs::exists(root_ / n)) throw CliError(kUsage, "refusing to overwrite " + (root_ / n).string() + " (use --force)");
  }

  std::ofstream open(const std::string& name) const {
    const fs::path p = root_ / name;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw CliError(kFailure, "cannot write " + p.string());
    spdlog::debug("writing {}", p.string());
    return out;
  }

  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  bool force_;
};

inline SuccessCriteria criteria(const CommonOptions& o) {
  SuccessCriteria c;
  if (o.strict_success) c.min_per_sector = 2;
  return c;
}

// ---------------------------------------------------------------------------

inline int cmd_calibrate(const CommonOptions& o) {
  const Scenario s = load_input(o);
  const OutputDir out(o.out_dir, o.force);
  out.claim({"calibration.csv", "fit.csv"});
  const auto samples = calibration_samples(s, o.seed);
  Calibration cal;
  try {
    cal = fit_calibration(samples);
  } catch (const FitError& e) {
    spdlog::error("calibration failed: {}", e.what());
    return kFailure;
  }
  {
    auto f = out.open("calibration.csv");
    write_calibration_csv(f, samples);
  }
  {
    auto f = out.open("fit.csv");
    write_fit_csv(f, cal);
  }
  for (const auto& [kind, fit] : cal.fits)
    std::printf("%-8s alpha=%.6g beta=%.6f rmse=%.6g m\n", std::string(to_string(kind)).c_str(), fit.alpha, fit.beta, fit.rmse);
  return kOk;
}

struct RunCommandOptions {
  CommonOptions common;
  bool dump_fields = false;
};

inline int cmd_run(const RunCommandOptions& ro) {
  const CommonOptions& o = ro.common;
  const Scenario s = load_input(o);
  const OutputDir out(o.out_dir, o.force);
  out.claim({"runlog.csv", "collisions.csv", "detections.csv", "report.csv", "traj_plotdata.csv", "scenario.json"});
  if (ro.dump_fields && !o.force && fs::exists(out.root() / "fields"))
    throw CliError(kUsage, "refusing to overwrite " + (out.root() / "fields").string() + " (use --force)");

  RunOptions opt;
  opt.threads = o.threads;
  opt.latency_ticks = o.latency_ticks;
  if (ro.dump_fields) {
    opt.dump_agent = 0;
    opt.field_dump = [&](std::int64_t tick, int, const GrnFrame& f) {
      char name[64];
      std::snprintf(name, sizeof name, "fields/agent0_tick%05lld.csv", static_cast<long long>(tick));
      auto file = out.open(name);
      write_field_csv(file, f, s.grn);
    };
  }
  spdlog::info("running {} (seed {}, {} ticks)", s.name, o.seed, s.max_ticks);
  RunLog log;
  try {
    log = run(s, o.seed, opt);
  } catch (const Error& e) {
    spdlog::error("run failed: {}", e.what());
    return kFailure;
  }
  const EntrapmentReport rep = evaluate(log, criteria(o));

  {
    auto f = out.open("runlog.csv");
    write_runlog_csv(f, log);
  }
  {
    auto f = out.open("collisions.csv");
    write_collisions_csv(f, log);
  }
  {
    auto f = out.open("detections.csv");
    write_detections_csv(f, log);
  }
  {
    auto f = out.open("report.csv");
    write_report_csv(f, {{s.name, o.seed, 0.0, s.dt, rep}});
  }
  {
    auto f = out.open("traj_plotdata.csv");
    write_plotdata_csv(f, log, rep);
  }
  {
    auto f = out.open("scenario.json");
    f << to_json(s).dump(2) << '\n';
  }

  if (rep.success_tick) {
    std::printf("success at tick %lld (%.2f s), avg speed %.3f m/s, collisions %d\n",
                static_cast<long long>(*rep.success_tick), *rep.success_tick * s.dt, rep.avg_speed, rep.collisions);
    return kOk;
  }
  std::printf("no entrapment within %lld ticks, collisions %d\n", static_cast<long long>(s.max_ticks), rep.collisions);
  return kNoSuccess;
}

struct BatchCommandOptions {
  CommonOptions common;
  int seeds = 20;
  std::vector<double> distances{6.0, 10.0, 14.0};
  std::vector<double> checkpoints{6.0, 10.0, 14.0};
};

inline int cmd_batch(const BatchCommandOptions& bo) {
  const CommonOptions& o = bo.common;
  if (bo.seeds < 1) throw CliError(kUsage, "--seeds must be at least 1");
  if (bo.distances.empty()) throw CliError(kUsage, "--distances must not be empty");
  const Scenario base = load_input(o);
  const OutputDir out(o.out_dir, o.force);
  out.claim({"table.csv", "report.csv"});

  struct Job {
    Scenario scenario;
    RunSummary summary;
  };
  std::vector<Job> jobs;
  for (double d : bo.distances) {
    Scenario s;
    try {
      s = with_initial_distance(base, d);
      validate(s);
    } catch (const ScenarioError& e) {
      throw CliError(kUsage, e.what());
    }
    for (int k = 0; k < bo.seeds; ++k) {
      Job j;
      j.scenario = s;
      j.summary.seed = derive_seed(o.seed, static_cast<std::uint64_t>(k), 0xBA7C);
      j.summary.initial_distance = d;
      j.summary.dt = s.dt;
      char id[64];
      std::snprintf(id, sizeof id, "d%g_s%02d", d, k);
      j.summary.run_id = id;
      jobs.push_back(std::move(j));
    }
  }

  std::mutex log_mutex;
  RunOptions opt;
  opt.latency_ticks = o.latency_ticks;
  opt.record_detections = false;
  const SuccessCriteria crit = criteria(o);
  detail::parallel_for(jobs.size(), o.threads, [&](std::size_t i) {
    Job& j = jobs[i];
    const RunLog log = run(j.scenario, j.summary.seed, opt);
    j.summary.report = evaluate(log, crit);
    std::lock_guard lock(log_mutex);
    spdlog::info("{}: {}", j.summary.run_id,
                 j.summary.report.success_tick ? "success at tick " + std::to_string(*j.summary.report.success_tick)
                                               : std::string("no success"));
  });

  std::vector<RunSummary> runs;
  for (const auto& j : jobs) runs.push_back(j.summary);
  const auto rows = summarize(runs, bo.checkpoints);
  {
    auto f = out.open("table.csv");
    write_table_csv(f, rows, bo.checkpoints);
  }
  {
    auto f = out.open("report.csv");
    write_report_csv(f, runs);
  }
  write_table_csv(std::cout, rows, bo.checkpoints);
  return kOk;
}

inline int cmd_export(const std::string& name, const std::string& path, bool force) {
  Scenario s;
  try {
    s = preset(name);
  } catch (const ScenarioError& e) {
    throw CliError(kUsage, e.what());
  }
  if (!force && fs::exists(path)) throw CliError(kUsage, "refusing to overwrite " + path + " (use --force)");
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  save_scenario(s, path);
  return kOk;
}

}  // namespace vgswarm::cli
