#pragma once

#include "bseot/kernels.hpp"
#include "bseot/shape.hpp"

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <vector>

namespace bseot {

struct SensorConfig {
  int id = 1;
  Vec3 position = Vec3(0.0, 0.0, 7.0);
  double yaw = 0.0;                        ///< boresight azimuth (rad)
  double horizontal_fov = 2.0 * std::numbers::pi;
  double min_elevation = -0.5 * std::numbers::pi;
  double max_elevation = 0.5 * std::numbers::pi;
  double rate = 10.0;                      ///< Hz
  Vec3 noise_std = Vec3::Constant(0.03);   ///< per-axis (m)
  double max_range = 200.0;                ///< m
  std::size_t points_budget = 300;         ///< max points per frame
  /// Beyond this range the point density drops with the inverse square of the
  /// range, emulating a fixed angular resolution. 0 disables the falloff.
  double falloff_range = 0.0;
  std::uint64_t seed = 1;

  kernels::ViewGeometry view() const;
  void validate() const;
};

struct TimedState {
  double timestamp;
  ObjectState state;
  double distance;  ///< path length travelled since t = 0 (m)
};

using Trajectory = std::vector<TimedState>;

struct LeftTurnParams {
  double speed = 8.0;        ///< m/s
  double turn_radius = 20.0; ///< m
  double duration = 8.0;     ///< s
  double dt = 0.1;           ///< s
  double turn_angle = 0.5 * std::numbers::pi;
  Vec2 start = Vec2::Zero();
  double start_heading = 0.0;
  double ground_height = 0.0;  ///< z of the road surface
};

/// Straight lead-in, constant-rate left arc, straight exit. The lead-in and
/// exit share the time not spent on the arc equally. `shape` provides the
/// extent part of every sample; its reference point sits half its profile
/// height above the road.
Trajectory make_left_turn_trajectory(const LeftTurnParams& params, const ObjectState& shape,
                                     double reference_height);
Trajectory make_left_turn_trajectory(double speed, double turn_radius, double duration, double dt);

/// Ground-truth vehicle side profile: a sedan outline with 10 control points,
/// scaled so the profile spans length x height and is centred on the origin.
ObjectState sedan_shape(double length = 4.5, double height = 1.5, double width = 2.0);
ShapeModel sedan_model();

struct Scenario {
  ShapeModel truth_model = sedan_model();
  Trajectory trajectory;
  std::vector<SensorConfig> sensors;
  double duration = 0.0;
  double frame_rate = 10.0;
  std::size_t candidate_points = 4000;
  std::uint64_t seed = 0;
};

struct SensorScan {
  int sensor_id = 0;
  std::vector<PointMeasurement> points;
  std::vector<Vec3> sources;  ///< noise-free surface point behind each measurement
};

struct Frame {
  std::size_t index = 0;
  double timestamp = 0.0;
  std::vector<SensorScan> scans;  ///< one per sensor that fires, in sensor order
  ObjectState ground_truth{0};
};

std::size_t frame_count(const Scenario& scenario);

/// Deterministic for a given scenario and frame index.
Frame render_frame_index(const Scenario& scenario, std::size_t index);
/// Throws std::out_of_range when t is outside the scenario or off the frame grid.
Frame render_frame(const Scenario& scenario, double t);

/// x,y,z,sensor_id rows for external tools.
void write_frame_csv(const Frame& frame, const std::filesystem::path& path);

}  // namespace bseot
