#pragma once

#include "bseot/spline.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace bseot {

using Vec3 = Eigen::Vector3d;
using Polygon2 = std::vector<Vec2>;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

/// Filter state: planar CTRV motion, vertical CV motion, extrusion width and
/// the body-frame (x, z) control points of the side-view profile.
///
///   [x, y, v_xy, psi, omega, z, v_z | q, c1x, c1z, ..., cnx, cnz]
class ObjectState {
 public:
  static constexpr Eigen::Index kX = 0;
  static constexpr Eigen::Index kY = 1;
  static constexpr Eigen::Index kSpeed = 2;
  static constexpr Eigen::Index kHeading = 3;
  static constexpr Eigen::Index kTurnRate = 4;
  static constexpr Eigen::Index kZ = 5;
  static constexpr Eigen::Index kVz = 6;
  static constexpr Eigen::Index kWidth = 7;
  static constexpr Eigen::Index kMotionDim = 7;

  static constexpr Eigen::Index control_x_index(std::size_t i) {
    return 8 + 2 * static_cast<Eigen::Index>(i);
  }
  static constexpr Eigen::Index control_z_index(std::size_t i) { return control_x_index(i) + 1; }
  static constexpr Eigen::Index dim_for(std::size_t control_points) {
    return control_x_index(control_points);
  }

  explicit ObjectState(std::size_t control_points);
  explicit ObjectState(Eigen::VectorXd values);

  std::size_t control_points() const;
  Eigen::Index dim() const { return values_.size(); }

  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }
  double operator[](Eigen::Index i) const { return values_(i); }
  double& operator[](Eigen::Index i) { return values_(i); }

  Vec3 position() const { return {values_(kX), values_(kY), values_(kZ)}; }
  void set_position(const Vec3& p);
  double heading() const { return values_(kHeading); }
  double width() const { return values_(kWidth); }

  Vec2 control_point(std::size_t i) const;
  void set_control_point(std::size_t i, const Vec2& c);
  std::vector<Vec2> control_polygon() const;

  /// Re-wraps the heading into (-pi, pi].
  void normalize();

 private:
  Eigen::VectorXd values_;
};

/// Fixes the profile parametrization: number of control points, degree and
/// the clamped uniform knot vector shared by every state of a track.
class ShapeModel {
 public:
  explicit ShapeModel(std::size_t control_points = 10, int degree = 3);

  std::size_t control_points() const { return control_points_; }
  int degree() const { return degree_; }
  const KnotVector& knots() const { return knots_; }
  Eigen::Index state_dim() const { return ObjectState::dim_for(control_points_); }

  BSplineCurve profile(const ObjectState& state) const;
  void check(const ObjectState& state) const;

 private:
  std::size_t control_points_;
  int degree_;
  KnotVector knots_;
};

struct PointMeasurement {
  Vec3 position = Vec3::Zero();
  Eigen::Matrix3d noise = Eigen::Matrix3d::Zero();
};

enum class SurfaceKind : std::uint8_t { extrusion, cap_positive_y, cap_negative_y };

struct SurfaceAssignment {
  SurfaceKind kind = SurfaceKind::extrusion;
  std::optional<double> tau;

  static SurfaceAssignment extrusion(double t) { return {SurfaceKind::extrusion, t}; }
  static SurfaceAssignment cap(bool positive) {
    return {positive ? SurfaceKind::cap_positive_y : SurfaceKind::cap_negative_y, std::nullopt};
  }
  bool is_cap() const { return kind != SurfaceKind::extrusion; }
  double cap_sign() const { return kind == SurfaceKind::cap_negative_y ? -1.0 : 1.0; }
};

class DegenerateProfileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Vec3 to_body(const ObjectState& state, const Vec3& point);
Vec3 to_global(const ObjectState& state, const Vec3& body_point);

// Planar polygon helpers used for the cap region and side-view IoU.
double signed_area(const Polygon2& polygon);
bool point_in_polygon(const Polygon2& polygon, const Vec2& p);
/// Distance to the boundary, negative inside.
double signed_distance(const Polygon2& polygon, const Vec2& p);
bool is_simple(const Polygon2& polygon);

/// Dense samples of the profile curve closed by the chord between its end
/// points. No simplicity check.
Polygon2 profile_polygon(const BSplineCurve& profile, int samples_per_span);

/// Body-frame side-view polygon of the state's profile. Throws
/// DegenerateProfileError when the polygon self-intersects.
Polygon2 side_view_polygon(const ObjectState& state, const ShapeModel& model,
                           int samples_per_span = 16);

/// Surface association against one fixed state. Builds the closest-point
/// samples and the cap region once so that a whole measurement batch can be
/// assigned cheaply.
class SurfaceQuery {
 public:
  SurfaceQuery(const ObjectState& state, const ShapeModel& model, int samples_per_span = 16);

  SurfaceAssignment assign(const Vec3& body_point) const;

  const BSplineCurve& profile() const { return closest_.curve(); }
  const Polygon2& region() const { return region_; }
  double half_width() const { return half_width_; }

 private:
  ClosestPointQuery closest_;
  Polygon2 region_;
  double half_width_;
};

/// Margin by which (x, z) must lie inside the cap region to be a cap candidate.
inline constexpr double kCapMargin = 1e-6;

SurfaceAssignment assign_surface(const ObjectState& state, const ShapeModel& model,
                                 const Vec3& body_point);

/// Level-set residual h at v = 0: (h_ex, h_ez) on the extrusion, (h_cy) on a cap.
Eigen::VectorXd pseudo_measurement(const ObjectState& state, const ShapeModel& model,
                                   const PointMeasurement& measurement,
                                   const SurfaceAssignment& assignment);

struct PseudoMeasurementLinearization {
  Eigen::VectorXd residual;
  Eigen::MatrixXd wrt_state;  ///< dh/dx, tau held fixed
  Eigen::MatrixXd wrt_noise;  ///< dh/dv for global-frame additive noise
};

/// Residual and Jacobians given precomputed profile basis weights at the
/// assigned tau (ignored for caps).
PseudoMeasurementLinearization linearize_pseudo_measurement(const ObjectState& state,
                                                            const PointMeasurement& measurement,
                                                            const SurfaceAssignment& assignment,
                                                            const Eigen::VectorXd& basis_weights);

PseudoMeasurementLinearization pseudo_measurement_jacobians(const ObjectState& state,
                                                            const ShapeModel& model,
                                                            const PointMeasurement& measurement,
                                                            const SurfaceAssignment& assignment);

struct SurfaceSample {
  Vec3 point;   ///< global frame
  Vec3 normal;  ///< outward unit normal, global frame
  SurfaceAssignment source;
};

/// Noise-free points on the extrusion sheet (uniform in tau and y) and on the
/// caps (rejection sampled inside the profile region), with outward normals.
std::vector<SurfaceSample> sample_surface_with_normals(const ObjectState& state,
                                                       const ShapeModel& model,
                                                       std::size_t count_extrusion,
                                                       std::size_t count_caps,
                                                       std::uint64_t seed);

std::vector<Vec3> sample_surface(const ObjectState& state, const ShapeModel& model,
                                 std::size_t count_extrusion, std::size_t count_caps,
                                 std::uint64_t seed);

}  // namespace bseot
