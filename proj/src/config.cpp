#include "bseot/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <initializer_list>
#include <numbers>
#include <set>
#include <sstream>

namespace bseot {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

void check_keys(const YAML::Node& node, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!keys.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
  const YAML::Node value = node[key];
  if (!value) return;
  try {
    out = value.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where + "." + key + ": malformed value");
  }
}

void read_angle(const YAML::Node& node, const char* key, double& out, const std::string& where) {
  double deg = out / kDeg;
  read(node, key, deg, where);
  out = deg * kDeg;
}

template <int N>
Eigen::Matrix<double, N, 1> read_vector(const YAML::Node& node, const char* key,
                                        const Eigen::Matrix<double, N, 1>& fallback,
                                        const std::string& where) {
  const YAML::Node value = node[key];
  if (!value) return fallback;
  std::vector<double> v;
  try {
    v = value.as<std::vector<double>>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where + "." + key + ": expected a list of numbers");
  }
  if (v.size() != static_cast<std::size_t>(N)) {
    throw ConfigError(where + "." + key + ": expected " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) out(i) = v[static_cast<std::size_t>(i)];
  return out;
}

SensorConfig parse_sensor(const YAML::Node& node, std::size_t index) {
  const std::string where = "sensors[" + std::to_string(index) + "]";
  check_keys(node, where,
             {"id", "position", "yaw_deg", "horizontal_fov_deg", "elevation_deg", "rate",
              "noise_std", "max_range", "points_budget", "falloff_range", "seed"});
  SensorConfig s;
  s.id = static_cast<int>(index) + 1;
  s.seed = index + 1;
  read(node, "id", s.id, where);
  s.position = read_vector<3>(node, "position", s.position, where);
  read_angle(node, "yaw_deg", s.yaw, where);
  read_angle(node, "horizontal_fov_deg", s.horizontal_fov, where);
  const Vec2 elevation = read_vector<2>(node, "elevation_deg",
                                        Vec2(s.min_elevation, s.max_elevation) / kDeg, where);
  s.min_elevation = elevation.x() * kDeg;
  s.max_elevation = elevation.y() * kDeg;
  read(node, "rate", s.rate, where);
  if (node["noise_std"] && node["noise_std"].IsScalar()) {
    double sigma = 0.0;
    read(node, "noise_std", sigma, where);
    s.noise_std = Vec3::Constant(sigma);
  } else {
    s.noise_std = read_vector<3>(node, "noise_std", s.noise_std, where);
  }
  read(node, "max_range", s.max_range, where);
  read(node, "points_budget", s.points_budget, where);
  read(node, "falloff_range", s.falloff_range, where);
  read(node, "seed", s.seed, where);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return s;
}

}  // namespace

TrackerConfig TrackerSettings::tracker_config() const {
  return TrackerConfig{ShapeModel(control_points, degree), process, init, update};
}

ScenarioConfig default_config() {
  ScenarioConfig c;
  c.trajectory.start = Vec2(-16.3, -20.0);
  SensorConfig start;
  start.id = 1;
  start.position = Vec3(-28.0, -26.0, 7.0);
  start.yaw = 20.0 * kDeg;
  start.horizontal_fov = 120.0 * kDeg;
  start.min_elevation = -70.0 * kDeg;
  start.max_elevation = 10.0 * kDeg;
  start.falloff_range = 20.0;
  start.seed = 1;
  SensorConfig exit = start;
  exit.id = 2;
  exit.position = Vec3(45.0, 10.0, 7.0);
  exit.yaw = -157.0 * kDeg;
  exit.seed = 2;
  c.sensors = {start, exit};
  c.tracker.update.extra_noise_var = 0.001;
  return c;
}

ScenarioConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("invalid YAML: ") + e.what());
  }
  if (!root || root.IsNull()) throw ConfigError("empty configuration");
  check_keys(root, "config",
             {"seed", "frame_rate", "candidate_points", "trajectory", "object", "sensors",
              "tracker", "fusion", "evaluation"});

  ScenarioConfig c = default_config();
  read(root, "seed", c.seed, "config");
  read(root, "frame_rate", c.frame_rate, "config");
  read(root, "candidate_points", c.candidate_points, "config");
  if (!(c.frame_rate > 0.0)) throw ConfigError("config.frame_rate must be positive");

  if (const YAML::Node t = root["trajectory"]) {
    check_keys(t, "trajectory",
               {"speed", "turn_radius", "duration", "turn_angle_deg", "start",
                "start_heading_deg", "ground_height"});
    read(t, "speed", c.trajectory.speed, "trajectory");
    read(t, "turn_radius", c.trajectory.turn_radius, "trajectory");
    read(t, "duration", c.trajectory.duration, "trajectory");
    read_angle(t, "turn_angle_deg", c.trajectory.turn_angle, "trajectory");
    c.trajectory.start = read_vector<2>(t, "start", c.trajectory.start, "trajectory");
    read_angle(t, "start_heading_deg", c.trajectory.start_heading, "trajectory");
    read(t, "ground_height", c.trajectory.ground_height, "trajectory");
  }
  c.trajectory.dt = 1.0 / c.frame_rate;

  if (const YAML::Node o = root["object"]) {
    check_keys(o, "object", {"length", "height", "width"});
    read(o, "length", c.object.length, "object");
    read(o, "height", c.object.height, "object");
    read(o, "width", c.object.width, "object");
  }

  if (const YAML::Node sensors = root["sensors"]) {
    if (!sensors.IsSequence() || sensors.size() == 0) {
      throw ConfigError("sensors: expected a non-empty list");
    }
    c.sensors.clear();
    std::set<int> ids;
    for (std::size_t i = 0; i < sensors.size(); ++i) {
      c.sensors.push_back(parse_sensor(sensors[i], i));
      if (!ids.insert(c.sensors.back().id).second) throw ConfigError("sensors: duplicate id");
    }
  }

  if (const YAML::Node tr = root["tracker"]) {
    check_keys(tr, "tracker", {"control_points", "degree", "process_noise", "init", "update"});
    read(tr, "control_points", c.tracker.control_points, "tracker");
    read(tr, "degree", c.tracker.degree, "tracker");
    if (const YAML::Node p = tr["process_noise"]) {
      check_keys(p, "tracker.process_noise",
                 {"accel_std", "yaw_accel_std", "vertical_accel_std", "shape_rw_var"});
      read(p, "accel_std", c.tracker.process.accel_std, "tracker.process_noise");
      read(p, "yaw_accel_std", c.tracker.process.yaw_accel_std, "tracker.process_noise");
      read(p, "vertical_accel_std", c.tracker.process.vertical_accel_std, "tracker.process_noise");
      read(p, "shape_rw_var", c.tracker.process.shape_rw_var, "tracker.process_noise");
    }
    if (const YAML::Node in = tr["init"]) {
      const std::string w = "tracker.init";
      check_keys(in, w,
                 {"min_points", "position_var", "speed_var", "heading_var", "turn_rate_var",
                  "vertical_speed_var", "width_var", "shape_var", "min_length", "min_height",
                  "min_width"});
      auto& i = c.tracker.init;
      read(in, "min_points", i.min_points, w);
      read(in, "position_var", i.position_var, w);
      read(in, "speed_var", i.speed_var, w);
      read(in, "heading_var", i.heading_var, w);
      read(in, "turn_rate_var", i.turn_rate_var, w);
      read(in, "vertical_speed_var", i.vertical_speed_var, w);
      read(in, "width_var", i.width_var, w);
      read(in, "shape_var", i.shape_var, w);
      read(in, "min_length", i.min_length, w);
      read(in, "min_height", i.min_height, w);
      read(in, "min_width", i.min_width, w);
    }
    if (const YAML::Node u = tr["update"]) {
      check_keys(u, "tracker.update", {"gate_sigma", "min_width", "extra_noise_var",
                                          "tangent_noise_var", "reassociate", "anchor_std"});
      read(u, "gate_sigma", c.tracker.update.gate_sigma, "tracker.update");
      read(u, "min_width", c.tracker.update.min_width, "tracker.update");
      read(u, "extra_noise_var", c.tracker.update.extra_noise_var, "tracker.update");
      read(u, "tangent_noise_var", c.tracker.update.tangent_noise_var, "tracker.update");
      read(u, "reassociate", c.tracker.update.reassociate, "tracker.update");
      read(u, "anchor_std", c.tracker.update.anchor_std, "tracker.update");
      const UpdateOptions& o = c.tracker.update;
      if (!(o.gate_sigma > 0.0) || o.extra_noise_var < 0.0 || o.tangent_noise_var < 0.0 ||
          o.anchor_std < 0.0) {
        throw ConfigError("tracker.update: gate_sigma must be positive, variances non-negative");
      }
    }
    if (c.tracker.degree < 1 ||
        c.tracker.control_points < static_cast<std::size_t>(c.tracker.degree) + 1) {
      throw ConfigError("tracker: need degree >= 1 and control_points > degree");
    }
  }

  if (const YAML::Node f = root["fusion"]) {
    check_keys(f, "fusion", {"min_points", "cost", "feedback"});
    read(f, "min_points", c.fusion.min_points, "fusion");
    std::string cost = c.fusion.cost == FusionCost::det ? "det" : "trace";
    read(f, "cost", cost, "fusion");
    if (cost == "det") {
      c.fusion.cost = FusionCost::det;
    } else if (cost == "trace") {
      c.fusion.cost = FusionCost::trace;
    } else {
      throw ConfigError("fusion.cost: expected 'det' or 'trace'");
    }
    read(f, "feedback", c.fusion.feedback, "fusion");
  }

  if (const YAML::Node e = root["evaluation"]) {
    check_keys(e, "evaluation", {"abort_position_error", "fold_orientation", "iou_variant"});
    read(e, "abort_position_error", c.eval.abort_position_error, "evaluation");
    read(e, "fold_orientation", c.eval.metrics.fold_orientation, "evaluation");
    std::string variant = "shape";
    read(e, "iou_variant", variant, "evaluation");
    if (variant == "shape") {
      c.eval.metrics.iou_variant = IoUVariant::shape_only;
    } else if (variant == "pose") {
      c.eval.metrics.iou_variant = IoUVariant::pose_included;
    } else {
      throw ConfigError("evaluation.iou_variant: expected 'shape' or 'pose'");
    }
  }
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

Scenario build_scenario(const ScenarioConfig& config, std::optional<std::uint64_t> seed_override) {
  Scenario scenario;
  scenario.truth_model = sedan_model();
  const ObjectState shape =
      sedan_shape(config.object.length, config.object.height, config.object.width);
  LeftTurnParams params = config.trajectory;
  params.dt = 1.0 / config.frame_rate;
  scenario.trajectory = make_left_turn_trajectory(params, shape, 0.5 * config.object.height);
  scenario.sensors = config.sensors;
  scenario.duration = params.duration;
  scenario.frame_rate = config.frame_rate;
  scenario.candidate_points = config.candidate_points;
  scenario.seed = seed_override.value_or(config.seed);
  return scenario;
}

}  // namespace bseot
