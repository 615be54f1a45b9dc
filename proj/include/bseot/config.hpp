#pragma once

#include "bseot/ekf.hpp"
#include "bseot/eval.hpp"
#include "bseot/fusion.hpp"
#include "bseot/sim.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bseot {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ObjectDims {
  double length = 4.5;
  double height = 1.5;
  double width = 2.0;
};

struct TrackerSettings {
  std::size_t control_points = 10;
  int degree = 3;
  ProcessNoiseConfig process;
  InitConfig init;
  UpdateOptions update;

  TrackerConfig tracker_config() const;
};

struct FusionSettings {
  std::size_t min_points = 5;
  FusionCost cost = FusionCost::det;
  bool feedback = false;  ///< write the fused estimate back into the local trackers
};

struct EvalSettings {
  double abort_position_error = 10.0;  ///< m; larger errors abort the run as diverged
  MetricOptions metrics;
};

/// Everything a run needs: the scenario, the shared tracker settings, fusion
/// and evaluation options.
struct ScenarioConfig {
  LeftTurnParams trajectory;
  ObjectDims object;
  double frame_rate = 10.0;
  std::size_t candidate_points = 4000;
  std::uint64_t seed = 7;
  std::vector<SensorConfig> sensors;
  TrackerSettings tracker;
  FusionSettings fusion;
  EvalSettings eval;
};

/// Parses the YAML scenario format. Missing keys keep their defaults; unknown
/// or malformed values raise ConfigError.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Default two-sensor left-turn scenario (matches configs/left_turn.yaml).
ScenarioConfig default_config();

Scenario build_scenario(const ScenarioConfig& config,
                        std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace bseot
