#include "bseot/config.hpp"
#include "bseot/pipeline.hpp"
#include "bseot/plot.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kBadInput = 2, kDiverged = 3 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extended object tracking with spline side profiles and multi-sensor fusion"};
  app.set_version_flag("--version", std::string("bseot ") + BSEOT_VERSION);
  app.require_subcommand(1);

  std::string config_path;
  std::string mode_text = "decentralized";
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t frames = 0;
  bool export_frames = false;
  auto* run = app.add_subcommand("run", "Run a scenario through one pipeline");
  run->add_option("--config", config_path, "Scenario YAML file")->required()->check(CLI::ExistingFile);
  run->add_option("--mode", mode_text, "single:<id>, centralized or decentralized")
      ->capture_default_str();
  run->add_option("--out", out_dir, "Output directory")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override the scenario seed");
  auto* frames_opt = run->add_option("--frames", frames, "Process at most N frames")
                         ->check(CLI::PositiveNumber);
  run->add_flag("--export-frames", export_frames, "Write per-frame point CSVs to <out>/frames");

  std::string metrics_path;
  std::string plot_dir;
  auto* plot = app.add_subcommand("plot", "Render metric time series as SVG");
  plot->add_option("--metrics", metrics_path, "metrics.csv from a run")->required();
  plot->add_option("--out", plot_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    try {
      const bseot::ScenarioConfig config = bseot::load_config(config_path);
      const bseot::RunMode mode = bseot::RunMode::parse(mode_text);
      bseot::RunOptions options;
      if (*seed_opt) options.seed = seed;
      if (*frames_opt) options.frames = frames;
      if (export_frames) options.frames_dir = std::filesystem::path(out_dir) / "frames";
      const bseot::RunResult result = bseot::run_pipeline(config, mode, options);
      bseot::write_outputs(result, out_dir);
      std::cout << bseot::summary_table(result);
      return kOk;
    } catch (const bseot::DivergenceError& e) {
      fmt::print(stderr, "divergence: {}\n", e.what());
      return kDiverged;
    } catch (const bseot::ConfigError& e) {
      fmt::print(stderr, "config error: {}\n", e.what());
      return kBadInput;
    } catch (const std::invalid_argument& e) {
      fmt::print(stderr, "error: {}\n", e.what());
      return kBadInput;
    } catch (const std::exception& e) {
      fmt::print(stderr, "error: {}\n", e.what());
      return kFailure;
    }
  }

  try {
    for (const auto& path : bseot::export_plots(metrics_path, plot_dir)) {
      std::cout << path.string() << '\n';
    }
  } catch (const bseot::PlotError& e) {
    fmt::print(stderr, "plot error: {}\n", e.what());
    return kBadInput;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kFailure;
  }
  return kOk;
}
