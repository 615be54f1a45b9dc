#pragma once

#include "bseot/shape.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace bseot {

struct GaussianEstimate {
  ObjectState mean{0};
  Eigen::MatrixXd covariance;
  double timestamp = 0.0;
};

/// Process noise of the prediction step. The planar part is driven by white
/// longitudinal and yaw accelerations, the vertical part by a white vertical
/// acceleration, and every shape parameter (width and control coordinates)
/// by a random walk with the given variance rate.
struct ProcessNoiseConfig {
  double accel_std = 2.0;           ///< m/s^2
  double yaw_accel_std = 0.5;       ///< rad/s^2
  double vertical_accel_std = 0.3;  ///< m/s^2
  double shape_rw_var = 1e-4;       ///< m^2/s
};

struct InitConfig {
  std::size_t min_points = 10;
  double position_var = 1.0;
  double speed_var = 4.0;
  double heading_var = 0.2741556778080377;  // (30 deg)^2
  double turn_rate_var = 0.1;
  double vertical_speed_var = 0.25;
  double width_var = 0.25;
  double shape_var = 0.25;
  // lower bounds on the bounding box used to scale the default profile
  double min_length = 1.0;
  double min_height = 0.5;
  double min_width = 1.0;
  /// Planar velocity guess, e.g. from centroid displacement between frames.
  /// Resolves the front/back ambiguity of the principal axis and seeds v_xy.
  std::optional<Vec2> motion_hint;
  double min_hint_speed = 0.5;
};

struct UpdateOptions {
  double gate_sigma = 3.0;
  double min_width = 0.05;
  /// Added to every projected measurement noise variance; absorbs profile
  /// association error.
  double extra_noise_var = 0.0;
  /// Variance added along the profile tangent at the assigned foot point (m²).
  /// The foot parameter is held fixed during the correction, so the
  /// tangential residual carries association error rather than signal.
  double tangent_noise_var = 1.0;
  /// Associate every measurement against the running mean. When false the
  /// whole batch is associated once against the prior mean, optionally with
  /// the OpenMP kernel.
  bool reassociate = true;
  bool parallel_association = true;
  /// Std of a pseudo-measurement pinning the control-point centroid to the
  /// reference point (m). Without it the reference point can slide against
  /// the profile unobserved. 0 disables it.
  double anchor_std = 0.05;
};

struct UpdateResult {
  GaussianEstimate estimate;
  std::size_t accepted = 0;
  std::size_t gated = 0;
};

/// Turn-rate magnitude below which the CTRV transition uses its series form.
inline constexpr double kStraightLineTurnRate = 1e-6;

ObjectState ctrv_transition(const ObjectState& state, double dt);
Eigen::MatrixXd transition_jacobian(const ObjectState& state, double dt);
Eigen::MatrixXd process_noise(const ObjectState& state, double dt,
                              const ProcessNoiseConfig& noise);

GaussianEstimate predict(const GaussianEstimate& est, double dt, const ProcessNoiseConfig& noise);

/// Sequential pseudo-measurement correction. tau stays fixed within each
/// single-measurement step.
UpdateResult update(const GaussianEstimate& est, std::span<const PointMeasurement> measurements,
                    const ShapeModel& model, const UpdateOptions& options = {});

/// Open rounded-rectangle profile from the rear bottom corner over the roof to
/// the front bottom corner, centred on the origin.
std::vector<Vec2> default_profile(std::size_t control_points, double length, double height);

/// Track birth from a single point cloud. Returns nullopt when there are fewer
/// than `init.min_points` measurements.
std::optional<GaussianEstimate> initialize(std::span<const PointMeasurement> measurements,
                                           const ShapeModel& model, const InitConfig& init,
                                           double timestamp = 0.0);

bool is_psd(const Eigen::MatrixXd& matrix, double tolerance = 1e-9);

struct TrackerConfig {
  ShapeModel model;
  ProcessNoiseConfig process;
  InitConfig init;
  UpdateOptions update;
  /// Frames older than this are not used as the first half of a two-frame birth.
  double max_birth_gap = 1.0;
};

/// Single-object tracker for one measurement stream. Births from two
/// consecutive frames so the centroid displacement can disambiguate heading.
class Tracker {
 public:
  explicit Tracker(TrackerConfig config);

  struct StepReport {
    bool initialized = false;  ///< a track exists after this step
    bool born = false;         ///< the track was created in this step
    std::size_t received = 0;
    std::size_t accepted = 0;
  };

  StepReport step(double timestamp, std::span<const PointMeasurement> measurements);

  const std::optional<GaussianEstimate>& estimate() const { return estimate_; }
  void set_estimate(GaussianEstimate est) { estimate_ = std::move(est); }
  const TrackerConfig& config() const { return config_; }

 private:
  struct Pending {
    double timestamp;
    Vec3 centroid;
  };

  TrackerConfig config_;
  std::optional<GaussianEstimate> estimate_;
  std::optional<Pending> pending_;
};

}  // namespace bseot
