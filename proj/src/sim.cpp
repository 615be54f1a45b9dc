#include "bseot/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace bseot {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

bool fires(const SensorConfig& sensor, double t) {
  const double ticks = t * sensor.rate;
  return std::abs(ticks - std::round(ticks)) < 1e-6;
}

}  // namespace

kernels::ViewGeometry SensorConfig::view() const {
  return {position, yaw, horizontal_fov, min_elevation, max_elevation, max_range};
}

void SensorConfig::validate() const {
  if (!(rate > 0.0)) throw std::invalid_argument("sensor rate must be positive");
  if (!(noise_std.array() >= 0.0).all()) throw std::invalid_argument("sensor noise must be >= 0");
  if (!(max_range > 0.0)) throw std::invalid_argument("sensor max_range must be positive");
}

ObjectState sedan_shape(double length, double height, double width) {
  // rear bottom, over the trunk, roof and hood, to the front bottom
  const std::vector<Vec2> raw = {{-2.25, -0.75}, {-2.35, -0.10}, {-2.20, 0.35}, {-1.30, 0.40},
                                 {-0.60, 0.85},  {0.40, 0.85},   {1.00, 0.25},  {2.20, 0.15},
                                 {2.35, -0.30},  {2.25, -0.75}};
  const ShapeModel model = sedan_model();
  const Polygon2 outline = profile_polygon(BSplineCurve(model.degree(), model.knots(), raw), 64);
  Vec2 lo = outline.front();
  Vec2 hi = outline.front();
  for (const Vec2& p : outline) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec2 center = 0.5 * (lo + hi);
  const Vec2 scale(length / (hi.x() - lo.x()), height / (hi.y() - lo.y()));

  ObjectState state(raw.size());
  state[ObjectState::kWidth] = width;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    state.set_control_point(i, (raw[i] - center).cwiseProduct(scale));
  }
  return state;
}

ShapeModel sedan_model() { return ShapeModel(10, 3); }

Trajectory make_left_turn_trajectory(const LeftTurnParams& p, const ObjectState& shape,
                                     double reference_height) {
  if (!(p.speed >= 0.0) || !(p.turn_radius > 0.0) || !(p.duration > 0.0) || !(p.dt > 0.0)) {
    throw std::invalid_argument("left-turn trajectory needs positive arguments");
  }
  const auto steps = static_cast<std::size_t>(std::llround(p.duration / p.dt));
  const double arc_length = p.turn_radius * p.turn_angle;
  const double total = p.speed * p.duration;
  const double lead = p.speed > 0.0 ? std::max(0.0, 0.5 * (total - arc_length)) : 0.0;
  const double turn_rate = p.speed / p.turn_radius;

  const Vec2 dir0(std::cos(p.start_heading), std::sin(p.start_heading));
  const Vec2 arc_start = p.start + lead * dir0;
  const Vec2 center = arc_start + p.turn_radius * Vec2(-dir0.y(), dir0.x());
  const double exit_heading = p.start_heading + p.turn_angle;
  const Vec2 arc_end =
      center + p.turn_radius * Vec2(std::sin(exit_heading), -std::cos(exit_heading));

  Trajectory out;
  out.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * p.dt;
    const double s = p.speed * t;
    Vec2 pos;
    double heading;
    double omega = 0.0;
    if (p.speed == 0.0 || s < lead) {
      pos = p.start + s * dir0;
      heading = p.start_heading;
    } else if (s < lead + arc_length) {
      heading = p.start_heading + (s - lead) / p.turn_radius;
      pos = center + p.turn_radius * Vec2(std::sin(heading), -std::cos(heading));
      omega = turn_rate;
    } else {
      heading = exit_heading;
      pos = arc_end + (s - lead - arc_length) * Vec2(std::cos(exit_heading), std::sin(exit_heading));
    }
    ObjectState state = shape;
    state[ObjectState::kX] = pos.x();
    state[ObjectState::kY] = pos.y();
    state[ObjectState::kSpeed] = p.speed;
    state[ObjectState::kHeading] = heading;
    state[ObjectState::kTurnRate] = omega;
    state[ObjectState::kZ] = p.ground_height + reference_height;
    state[ObjectState::kVz] = 0.0;
    state.normalize();
    out.push_back({t, std::move(state), s});
  }
  return out;
}

Trajectory make_left_turn_trajectory(double speed, double turn_radius, double duration,
                                     double dt) {
  LeftTurnParams params;
  params.speed = speed;
  params.turn_radius = turn_radius;
  params.duration = duration;
  params.dt = dt;
  return make_left_turn_trajectory(params, sedan_shape(), 0.75);
}

std::size_t frame_count(const Scenario& scenario) { return scenario.trajectory.size(); }

Frame render_frame_index(const Scenario& scenario, std::size_t index) {
  if (index >= scenario.trajectory.size()) throw std::out_of_range("frame index out of range");
  const TimedState& truth = scenario.trajectory[index];
  Frame frame;
  frame.index = index;
  frame.timestamp = truth.timestamp;
  frame.ground_truth = truth.state;

  const ShapeModel& model = scenario.truth_model;
  const Polygon2 region = profile_polygon(model.profile(truth.state), 16);
  double curve_length = 0.0;
  for (std::size_t i = 0; i + 1 < region.size(); ++i) curve_length += (region[i + 1] - region[i]).norm();
  const double sheet_area = curve_length * truth.state.width();
  const double cap_area = 2.0 * std::abs(signed_area(region));
  const auto extrusion_count = static_cast<std::size_t>(std::llround(
      static_cast<double>(scenario.candidate_points) * sheet_area / (sheet_area + cap_area)));
  const std::size_t cap_count = scenario.candidate_points - extrusion_count;

  for (const SensorConfig& sensor : scenario.sensors) {
    if (!fires(sensor, truth.timestamp)) continue;
    const std::uint64_t seed =
        mix_seed(mix_seed(scenario.seed, sensor.seed), static_cast<std::uint64_t>(index));
    const auto candidates =
        sample_surface_with_normals(truth.state, model, extrusion_count, cap_count, seed);
    const auto mask = kernels::visibility_mask(sensor.view(), candidates);

    std::mt19937_64 rng(mix_seed(seed, 0x5eed));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (!mask[i]) continue;
      if (sensor.falloff_range > 0.0) {
        const double range = (candidates[i].point - sensor.position).norm();
        const double keep = std::min(1.0, std::pow(sensor.falloff_range / range, 2));
        if (unit(rng) >= keep) continue;
      }
      kept.push_back(i);
    }
    std::shuffle(kept.begin(), kept.end(), rng);
    if (kept.size() > sensor.points_budget) kept.resize(sensor.points_budget);
    std::sort(kept.begin(), kept.end());

    SensorScan scan;
    scan.sensor_id = sensor.id;
    const Eigen::Matrix3d R = sensor.noise_std.cwiseProduct(sensor.noise_std).asDiagonal();
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i : kept) {
      const Vec3& src = candidates[i].point;
      const Vec3 noise(gauss(rng), gauss(rng), gauss(rng));
      scan.points.push_back({src + sensor.noise_std.cwiseProduct(noise), R});
      scan.sources.push_back(src);
    }
    frame.scans.push_back(std::move(scan));
  }
  return frame;
}

Frame render_frame(const Scenario& scenario, double t) {
  if (scenario.trajectory.empty()) throw std::out_of_range("scenario has no trajectory");
  const double t0 = scenario.trajectory.front().timestamp;
  const double t1 = scenario.trajectory.back().timestamp;
  if (t < t0 - 1e-9 || t > t1 + 1e-9) throw std::out_of_range("time outside scenario duration");
  const auto index =
      static_cast<std::size_t>(std::llround((t - t0) * scenario.frame_rate));
  if (index >= scenario.trajectory.size() ||
      std::abs(scenario.trajectory[index].timestamp - t) > 1e-6) {
    throw std::out_of_range("time is not on the frame grid");
  }
  return render_frame_index(scenario, index);
}

void write_frame_csv(const Frame& frame, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "x,y,z,sensor_id\n";
  for (const SensorScan& scan : frame.scans) {
    for (const PointMeasurement& m : scan.points) {
      out << fmt::format("{:.6f},{:.6f},{:.6f},{}\n", m.position.x(), m.position.y(),
                         m.position.z(), scan.sensor_id);
    }
  }
}

}  // namespace bseot
