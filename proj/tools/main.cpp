// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "raybos/engine.hpp"
#include "raybos/validate.hpp"

namespace {

struct CommonFlags {
  std::uint64_t seed = 0;
  bool has_seed = false;
  int threads = -1;
  bool deterministic = false;
  bool no_deterministic = false;
  std::string out_dir;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--seed", flags.seed, "Override the bundle seed")
      ->each([&flags](const std::string&) { flags.has_seed = true; });
  cmd->add_option("--threads", flags.threads, "Worker count (0 = all cores)");
  cmd->add_flag("--deterministic", flags.deterministic,
                "Bit-reproducible image accumulation for any worker count");
  cmd->add_flag("--no-deterministic", flags.no_deterministic,
                "Per-worker buffer accumulation (faster for huge spots)");
  cmd->add_option("--out", flags.out_dir, "Output directory");
}

raybos::ExperimentConfig load_with_flags(const std::string& path, const CommonFlags& flags) {
  raybos::ExperimentConfig cfg = raybos::load_config(path);
  if (flags.has_seed) cfg.bundle.seed = flags.seed;
  if (flags.threads >= 0) cfg.run.threads = flags.threads;
  if (flags.deterministic) cfg.run.deterministic = true;
  if (flags.no_deterministic) cfg.run.deterministic = false;
  if (!flags.out_dir.empty()) cfg.run.out_dir = flags.out_dir;
  return cfg;
}

void print_report(const raybos::RunReport& report) {
  std::printf("  rays emitted %ld, landed %ld, blocked %ld, lost %ld (%.2f s, %d threads)\n",
              report.emitted, report.landed, report.blocked_total(), report.lost,
              report.wall_seconds, report.threads);
}

int run_validate(const std::string& suite, const std::string& out_dir) {
  std::vector<std::string> names;
  if (suite == "all")
    names = raybos::validation_suite_names();
  else
    names.push_back(suite);

  bool all_passed = true;
  for (const std::string& name : names) {
    const raybos::SuiteResult result = raybos::run_validation_suite(name);
    all_passed = all_passed && result.passed;
    std::printf("[%s] %s (%.2f s)\n", result.passed ? "PASS" : "FAIL", result.suite.c_str(),
                result.seconds);
    for (const auto& check : result.checks)
      std::printf("  [%s] %s: %s\n", check.passed ? "ok" : "FAIL", check.name.c_str(),
                  check.detail.c_str());
    if (!result.table.empty() && !out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      const std::string path = out_dir + "/" + result.suite + ".csv";
      std::FILE* f = std::fopen(path.c_str(), "w");
      if (f) {
        for (const auto& row : result.table) std::fprintf(f, "%s\n", row.c_str());
        std::fclose(f);
        std::printf("  table written to %s\n", path.c_str());
      }
    } else {
      for (const auto& row : result.table) std::printf("  %s\n", row.c_str());
    }
  }
  return all_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"raybos: ray-traced synthetic image generation for PIV/BOS experiments"};
  app.require_subcommand(1);

  std::string config_path;
  CommonFlags flags;
  int dot_index = 0;
  int ray_index = 0;
  std::string suite;

  auto* render_cmd = app.add_subcommand("render", "Render a dot-pattern or particle image");
  render_cmd->add_option("config", config_path, "Experiment config (JSON)")->required();
  add_common_flags(render_cmd, flags);

  auto* bos_cmd =
      app.add_subcommand("bos", "Trace with and without the density field and compare to theory");
  bos_cmd->add_option("config", config_path, "Experiment config (JSON)")->required();
  add_common_flags(bos_cmd, flags);

  auto* debug_cmd = app.add_subcommand("trace-debug", "Dump one ray's volume trajectory as CSV");
  debug_cmd->add_option("config", config_path, "Experiment config (JSON)")->required();
  debug_cmd->add_option("--dot", dot_index, "Source point index")->required();
  debug_cmd->add_option("--ray", ray_index, "Ray index within the bundle")->required();
  add_common_flags(debug_cmd, flags);

  auto* validate_cmd = app.add_subcommand("validate", "Run a named validation suite");
  validate_cmd
      ->add_option("suite", suite,
                   "snell | rk4-convergence | lens-focus | energy | bos-uniform | bos-blob | all")
      ->required();
  validate_cmd->add_option("--out", flags.out_dir, "Directory for machine-readable tables");

  CLI11_PARSE(app, argc, argv);

  try {
    if (render_cmd->parsed()) {
      const auto cfg = load_with_flags(config_path, flags);
      const auto result = raybos::render(cfg);
      std::printf("render: gain %.3e\n", result.gain);
      print_report(result.report);
      if (!result.image_path.empty()) std::printf("  image written to %s\n", result.image_path.c_str());
      return 0;
    }
    if (bos_cmd->parsed()) {
      const auto cfg = load_with_flags(config_path, flags);
      const auto result = raybos::bos_run(cfg);
      std::printf("bos: reference trace\n");
      print_report(result.reference_report);
      std::printf("bos: gradient trace\n");
      print_report(result.gradient_report);
      std::printf(
          "  metrics (%s): rms %.4g, peak |diff| %.4g, correlation %.4f, "
          "theory peak %.4g, measured peak %.4g, %d nodes\n",
          cfg.bos.units.c_str(), result.metrics.rms_error, result.metrics.peak_abs_error,
          result.metrics.pearson_correlation, result.metrics.peak_a, result.metrics.peak_b,
          result.metrics.nodes);
      return 0;
    }
    if (debug_cmd->parsed()) {
      const auto cfg = load_with_flags(config_path, flags);
      const auto records = raybos::trace_debug(cfg, dot_index, ray_index);
      if (!flags.out_dir.empty()) {
        std::filesystem::create_directories(flags.out_dir);
        const std::string path = flags.out_dir + "/trace.csv";
        raybos::write_trace_debug_csv(records, path);
        std::printf("trace-debug: %zu steps written to %s\n", records.size(), path.c_str());
      } else {
        std::printf("xi,x,y,z,tx,ty,tz\n");
        for (const auto& rec : records)
          std::printf("%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g\n", rec.xi, rec.state.r.x,
                      rec.state.r.y, rec.state.r.z, rec.state.t.x, rec.state.t.y, rec.state.t.z);
      }
      return 0;
    }
    if (validate_cmd->parsed()) return run_validate(suite, flags.out_dir);
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  }
  return 0;
}
