#include "bseot/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace bseot {

namespace {

const std::vector<PointMeasurement> kNoPoints;

const std::vector<PointMeasurement>& points_of(const Frame& frame, int sensor_id) {
  for (const SensorScan& scan : frame.scans) {
    if (scan.sensor_id == sensor_id) return scan.points;
  }
  return kNoPoints;
}

std::vector<SensorConfig> sorted_by_id(std::vector<SensorConfig> sensors) {
  std::sort(sensors.begin(), sensors.end(),
            [](const SensorConfig& a, const SensorConfig& b) { return a.id < b.id; });
  return sensors;
}

class Recorder {
 public:
  Recorder(const ScenarioConfig& config, const ShapeModel& model, RunResult& result)
      : config_(config), model_(model), result_(result) {}

  void begin_frame(const Frame& frame, const ShapeModel& truth_model) {
    truth_ = frame.ground_truth;
    truth_profile_ = side_view_polygon(truth_, truth_model, config_.eval.metrics.samples_per_span);
  }

  void record(const std::string& variant, const std::string& status,
              const GaussianEstimate& estimate) {
    FrameMetrics m;
    try {
      m = frame_metrics(estimate, model_, truth_, truth_profile_, config_.eval.metrics);
    } catch (const DegenerateProfileError&) {
      m = pose_metrics(estimate, truth_, config_.eval.metrics);
      m.side_iou = 0.0;
    }
    if (!(m.position_error <= config_.eval.abort_position_error)) {
      throw DivergenceError(variant, estimate.timestamp, m.position_error);
    }
    result_.metrics.push_back({variant, m});
    result_.estimates.push_back({estimate.timestamp, variant, status, estimate.mean});
  }

 private:
  const ScenarioConfig& config_;
  const ShapeModel& model_;
  RunResult& result_;
  ObjectState truth_{0};
  Polygon2 truth_profile_;
};

std::string local_name(int id) { return fmt::format("local:{}", id); }

}  // namespace

RunMode RunMode::parse(const std::string& text) {
  if (text == "centralized") return {PipelineKind::centralized, 0};
  if (text == "decentralized") return {PipelineKind::decentralized, 0};
  const std::string prefix = "single:";
  if (text.rfind(prefix, 0) == 0 && text.size() > prefix.size()) {
    const std::string digits = text.substr(prefix.size());
    if (std::all_of(digits.begin(), digits.end(), [](char ch) { return ch >= '0' && ch <= '9'; }) &&
        digits.size() < 9) {
      return {PipelineKind::single, std::stoi(digits)};
    }
  }
  throw std::invalid_argument("unknown mode '" + text +
                              "' (expected single:<id>, centralized or decentralized)");
}

std::string RunMode::name() const {
  switch (kind) {
    case PipelineKind::single:
      return fmt::format("single:{}", sensor_id);
    case PipelineKind::centralized:
      return "centralized";
    case PipelineKind::decentralized:
      break;
  }
  return "decentralized";
}

DivergenceError::DivergenceError(const std::string& variant, double timestamp,
                                 double position_error)
    : std::runtime_error(fmt::format("track '{}' diverged at t={:.2f} s (position error {:.2f} m)",
                                     variant, timestamp, position_error)),
      variant_(variant),
      timestamp_(timestamp) {}

RunResult run_pipeline(const ScenarioConfig& config, const RunMode& mode,
                       const RunOptions& options) {
  const Scenario scenario = build_scenario(config, options.seed);
  const std::vector<SensorConfig> sensors = sorted_by_id(config.sensors);
  if (mode.kind == PipelineKind::single &&
      std::none_of(sensors.begin(), sensors.end(),
                   [&](const SensorConfig& s) { return s.id == mode.sensor_id; })) {
    throw ConfigError(fmt::format("mode {}: no sensor with id {}", mode.name(), mode.sensor_id));
  }

  const TrackerConfig tracker_config = config.tracker.tracker_config();
  RunResult result;
  result.mode = mode.name();
  Recorder recorder(config, tracker_config.model, result);

  std::size_t frames = frame_count(scenario);
  if (options.frames) frames = std::min(frames, *options.frames);
  if (options.frames_dir) std::filesystem::create_directories(*options.frames_dir);

  std::vector<Tracker> trackers;
  if (mode.kind == PipelineKind::decentralized) {
    for (std::size_t i = 0; i < sensors.size(); ++i) trackers.emplace_back(tracker_config);
  } else {
    trackers.emplace_back(tracker_config);
  }
  std::optional<GaussianEstimate> fused;

  for (std::size_t k = 0; k < frames; ++k) {
    const Frame frame = render_frame_index(scenario, k);
    const double t = frame.timestamp;
    if (options.frames_dir) {
      write_frame_csv(frame, *options.frames_dir / fmt::format("frame_{:04d}.csv", k));
    }
    recorder.begin_frame(frame, scenario.truth_model);
    ++result.frames;

    switch (mode.kind) {
      case PipelineKind::single: {
        Tracker& tracker = trackers.front();
        tracker.step(t, points_of(frame, mode.sensor_id));
        if (tracker.estimate()) recorder.record(mode.name(), "tracked", *tracker.estimate());
        break;
      }
      case PipelineKind::centralized: {
        Tracker& tracker = trackers.front();
        if (!tracker.estimate()) {
          std::vector<PointMeasurement> all;
          for (const SensorConfig& s : sensors) {
            const auto& pts = points_of(frame, s.id);
            all.insert(all.end(), pts.begin(), pts.end());
          }
          tracker.step(t, all);
        } else {
          for (const SensorConfig& s : sensors) tracker.step(t, points_of(frame, s.id));
        }
        if (tracker.estimate()) recorder.record("centralized", "tracked", *tracker.estimate());
        break;
      }
      case PipelineKind::decentralized: {
        const auto count = static_cast<std::ptrdiff_t>(trackers.size());
        std::vector<Tracker::StepReport> reports(trackers.size());
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < count; ++i) {
          const auto u = static_cast<std::size_t>(i);
          reports[u] = trackers[u].step(t, points_of(frame, sensors[u].id));
        }

        std::vector<std::size_t> ready;
        for (std::size_t i = 0; i < trackers.size(); ++i) {
          if (trackers[i].estimate() &&
              gate_fusion(reports[i].accepted, reports[i].accepted, config.fusion.min_points)) {
            ready.push_back(i);
          }
        }
        if (ready.size() >= 2) {
          GaussianEstimate acc = *trackers[ready[0]].estimate();
          for (std::size_t j = 1; j < ready.size(); ++j) {
            acc = fuse_ci(acc, *trackers[ready[j]].estimate(), config.fusion.cost).fused;
          }
          fused = std::move(acc);
          ++result.fused_frames;
          if (config.fusion.feedback) {
            for (std::size_t i : ready) trackers[i].set_estimate(*fused);
          }
          recorder.record("fused", "fused", *fused);
        } else if (fused) {
          if (t > fused->timestamp) fused = predict(*fused, t - fused->timestamp, tracker_config.process);
          ++result.carried_frames;
          recorder.record("fused", "carried", *fused);
        }
        for (std::size_t i = 0; i < trackers.size(); ++i) {
          if (trackers[i].estimate()) {
            recorder.record(local_name(sensors[i].id), "tracked", *trackers[i].estimate());
          }
        }
        break;
      }
    }
  }
  result.summary = summarize(result.metrics);
  return result;
}

std::vector<SummaryRow> summarize(const std::vector<MetricRow>& rows) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const FrameMetrics*>> groups;
  for (const MetricRow& row : rows) {
    auto& group = groups[row.variant];
    if (group.empty()) order.push_back(row.variant);
    group.push_back(&row.metrics);
  }
  std::vector<SummaryRow> out;
  for (const std::string& variant : order) {
    const auto& group = groups[variant];
    std::vector<double> pos, z, psi;
    SummaryRow s;
    s.variant = variant;
    s.frames = group.size();
    for (const FrameMetrics* m : group) {
      pos.push_back(m->position_error);
      z.push_back(m->z_error);
      psi.push_back(m->orientation_error);
      s.mean_iou += m->side_iou;
      s.max_abs_z = std::max(s.max_abs_z, std::abs(m->z_error));
    }
    s.pos_rmse = rmse(pos);
    s.z_rmse = rmse(z);
    s.psi_rmse = rmse(psi);
    s.mean_iou /= static_cast<double>(group.size());
    out.push_back(s);
  }
  return out;
}

std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::string out = "t,variant,pos_err,z_err,psi_err,iou\n";
  for (const MetricRow& r : rows) {
    const FrameMetrics& m = r.metrics;
    out += fmt::format("{:.3f},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", m.timestamp, r.variant,
                       m.position_error, m.z_error, m.orientation_error, m.side_iou);
  }
  return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "variant,frames,pos_rmse,z_rmse,psi_rmse,mean_iou,max_abs_z\n";
  for (const SummaryRow& s : rows) {
    out += fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", s.variant, s.frames,
                       s.pos_rmse, s.z_rmse, s.psi_rmse, s.mean_iou, s.max_abs_z);
  }
  return out;
}

std::string estimates_csv(const std::vector<EstimateRow>& rows) {
  std::string out = "t,variant,status,x,y,v,psi,omega,z,vz,q";
  const std::size_t n = rows.empty() ? 0 : rows.front().mean.control_points();
  for (std::size_t i = 0; i < n; ++i) out += fmt::format(",c{}x,c{}z", i, i);
  out += '\n';
  for (const EstimateRow& r : rows) {
    out += fmt::format("{:.3f},{},{}", r.timestamp, r.variant, r.status);
    for (Eigen::Index i = 0; i < r.mean.values().size(); ++i) {
      out += fmt::format(",{:.6f}", r.mean.values()(i));
    }
    out += '\n';
  }
  return out;
}

std::string summary_table(const RunResult& result) {
  std::string out = fmt::format("mode {}: {} frames", result.mode, result.frames);
  if (result.fused_frames + result.carried_frames > 0) {
    out += fmt::format(" ({} fused, {} carried)", result.fused_frames, result.carried_frames);
  }
  out += '\n';
  out += fmt::format("{:<14} {:>6} {:>9} {:>9} {:>9} {:>9} {:>9}\n", "variant", "frames",
                     "pos_rmse", "z_rmse", "psi_rmse", "mean_iou", "max|z|");
  for (const SummaryRow& s : result.summary) {
    out += fmt::format("{:<14} {:>6} {:>9.4f} {:>9.4f} {:>9.4f} {:>9.4f} {:>9.4f}\n", s.variant,
                       s.frames, s.pos_rmse, s.z_rmse, s.psi_rmse, s.mean_iou, s.max_abs_z);
  }
  return out;
}

void write_outputs(const RunResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto write = [&](const char* name, const std::string& content) {
    std::ofstream out(out_dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (out_dir / name).string());
    out << content;
  };
  write("metrics.csv", metrics_csv(result.metrics));
  write("summary.csv", summary_csv(result.summary));
  write("estimates.csv", estimates_csv(result.estimates));
}

}  // namespace bseot
