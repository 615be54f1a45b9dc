#pragma once

#include "bseot/config.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bseot {

enum class PipelineKind { single, centralized, decentralized };

struct RunMode {
  PipelineKind kind = PipelineKind::decentralized;
  int sensor_id = 0;  ///< only for single

  /// Accepts "single:<id>", "centralized" and "decentralized".
  static RunMode parse(const std::string& text);
  std::string name() const;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& variant, double timestamp, double position_error);
  const std::string& variant() const { return variant_; }
  double timestamp() const { return timestamp_; }

 private:
  std::string variant_;
  double timestamp_;
};

struct MetricRow {
  std::string variant;
  FrameMetrics metrics;
};

/// Per-frame track output. status is "tracked" for single/centralized and
/// local tracks, and "fused" or "carried" for the decentralized fused track.
struct EstimateRow {
  double timestamp = 0.0;
  std::string variant;
  std::string status;
  ObjectState mean{0};
};

struct SummaryRow {
  std::string variant;
  std::size_t frames = 0;
  double pos_rmse = 0.0;
  double z_rmse = 0.0;
  double psi_rmse = 0.0;
  double mean_iou = 0.0;
  double max_abs_z = 0.0;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> frames;  ///< limit on the number of processed frames
  std::optional<std::filesystem::path> frames_dir;  ///< per-frame point CSV export
};

struct RunResult {
  std::string mode;
  std::vector<MetricRow> metrics;
  std::vector<EstimateRow> estimates;
  std::vector<SummaryRow> summary;
  std::size_t frames = 0;
  std::size_t fused_frames = 0;
  std::size_t carried_frames = 0;
};

/// Throws DivergenceError when any reported track drifts farther than
/// config.eval.abort_position_error from the truth.
RunResult run_pipeline(const ScenarioConfig& config, const RunMode& mode,
                       const RunOptions& options = {});

std::vector<SummaryRow> summarize(const std::vector<MetricRow>& rows);

/// metrics.csv, summary.csv and estimates.csv in `out_dir`.
void write_outputs(const RunResult& result, const std::filesystem::path& out_dir);
std::string metrics_csv(const std::vector<MetricRow>& rows);
std::string summary_csv(const std::vector<SummaryRow>& rows);
std::string estimates_csv(const std::vector<EstimateRow>& rows);
std::string summary_table(const RunResult& result);

}  // namespace bseot
