#include "bseot/shape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace bseot {

double wrap_angle(double angle) {
  if (angle > -std::numbers::pi && angle <= std::numbers::pi) return angle;
  double wrapped = std::remainder(angle, 2.0 * std::numbers::pi);
  if (wrapped <= -std::numbers::pi) wrapped += 2.0 * std::numbers::pi;
  return wrapped;
}

ObjectState::ObjectState(std::size_t control_points)
    : values_(Eigen::VectorXd::Zero(dim_for(control_points))) {}

ObjectState::ObjectState(Eigen::VectorXd values) : values_(std::move(values)) {
  if (values_.size() < dim_for(0) || (values_.size() - dim_for(0)) % 2 != 0) {
    throw std::invalid_argument("state dimension must be 8 + 2n");
  }
}

std::size_t ObjectState::control_points() const {
  return static_cast<std::size_t>((values_.size() - dim_for(0)) / 2);
}

void ObjectState::set_position(const Vec3& p) {
  values_(kX) = p.x();
  values_(kY) = p.y();
  values_(kZ) = p.z();
}

Vec2 ObjectState::control_point(std::size_t i) const {
  return {values_(control_x_index(i)), values_(control_z_index(i))};
}

void ObjectState::set_control_point(std::size_t i, const Vec2& c) {
  values_(control_x_index(i)) = c.x();
  values_(control_z_index(i)) = c.y();
}

std::vector<Vec2> ObjectState::control_polygon() const {
  std::vector<Vec2> out(control_points());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = control_point(i);
  return out;
}

void ObjectState::normalize() { values_(kHeading) = wrap_angle(values_(kHeading)); }

ShapeModel::ShapeModel(std::size_t control_points, int degree)
    : control_points_(control_points),
      degree_(degree),
      knots_(KnotVector::clamped_uniform(control_points, degree)) {}

BSplineCurve ShapeModel::profile(const ObjectState& state) const {
  check(state);
  return BSplineCurve(degree_, knots_, state.control_polygon());
}

void ShapeModel::check(const ObjectState& state) const {
  if (state.control_points() != control_points_) {
    throw std::invalid_argument("state control-point count does not match the shape model");
  }
}

Vec3 to_body(const ObjectState& state, const Vec3& point) {
  const double c = std::cos(state.heading());
  const double s = std::sin(state.heading());
  const Vec3 d = point - state.position();
  return {c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z()};
}

Vec3 to_global(const ObjectState& state, const Vec3& body_point) {
  const double c = std::cos(state.heading());
  const double s = std::sin(state.heading());
  const Vec3& b = body_point;
  return state.position() + Vec3(c * b.x() - s * b.y(), s * b.x() + c * b.y(), b.z());
}

double signed_area(const Polygon2& polygon) {
  double twice = 0.0;
  const std::size_t m = polygon.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2& a = polygon[i];
    const Vec2& b = polygon[(i + 1) % m];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * twice;
}

bool point_in_polygon(const Polygon2& polygon, const Vec2& p) {
  bool inside = false;
  const std::size_t m = polygon.size();
  for (std::size_t i = 0, j = m - 1; i < m; j = i++) {
    const Vec2& a = polygon[i];
    const Vec2& b = polygon[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

namespace {

double segment_distance2(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * ab - p).squaredNorm();
}

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double d1 = cross(q1, q2, p1);
  const double d2 = cross(q1, q2, p2);
  const double d3 = cross(p1, p2, q1);
  const double d4 = cross(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

}  // namespace

double signed_distance(const Polygon2& polygon, const Vec2& p) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t m = polygon.size();
  for (std::size_t i = 0; i < m; ++i) {
    best = std::min(best, segment_distance2(p, polygon[i], polygon[(i + 1) % m]));
  }
  const double d = std::sqrt(best);
  return point_in_polygon(polygon, p) ? -d : d;
}

bool is_simple(const Polygon2& polygon) {
  const std::size_t m = polygon.size();
  if (m < 3) return false;
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2& a1 = polygon[i];
    const Vec2& a2 = polygon[(i + 1) % m];
    for (std::size_t j = i + 2; j < m; ++j) {
      if (i == 0 && j == m - 1) continue;  // adjacent through the wrap
      if (segments_intersect(a1, a2, polygon[j], polygon[(j + 1) % m])) return false;
    }
  }
  return std::abs(signed_area(polygon)) > 0.0;
}

Polygon2 profile_polygon(const BSplineCurve& profile, int samples_per_span) {
  if (samples_per_span < 2) throw std::invalid_argument("need at least 2 samples per span");
  const auto& knots = profile.knots();
  const auto d = static_cast<std::size_t>(profile.degree());
  const std::size_t n = profile.size();
  Polygon2 out;
  auto push = [&out](const Vec2& p) {
    if (out.empty() || (out.back() - p).norm() > 1e-12) out.push_back(p);
  };
  for (std::size_t k = d; k < n; ++k) {
    const double a = knots[k];
    const double b = knots[k + 1];
    if (!(a < b)) continue;
    for (int j = 0; j < samples_per_span; ++j) {
      push(profile.evaluate(a + (b - a) * static_cast<double>(j) / samples_per_span));
    }
  }
  push(profile.evaluate(profile.domain().second));
  if (out.size() > 1 && (out.front() - out.back()).norm() <= 1e-12) out.pop_back();
  return out;
}

Polygon2 side_view_polygon(const ObjectState& state, const ShapeModel& model,
                           int samples_per_span) {
  Polygon2 polygon = profile_polygon(model.profile(state), samples_per_span);
  if (!is_simple(polygon)) throw DegenerateProfileError("side-view profile self-intersects");
  return polygon;
}

SurfaceQuery::SurfaceQuery(const ObjectState& state, const ShapeModel& model,
                           int samples_per_span)
    : closest_(model.profile(state)),
      region_(profile_polygon(closest_.curve(), samples_per_span)),
      half_width_(0.5 * state.width()) {}

SurfaceAssignment SurfaceQuery::assign(const Vec3& body_point) const {
  const Vec2 xz(body_point.x(), body_point.z());
  const double tau = closest_.closest_tau(xz);
  if (signed_distance(region_, xz) < -kCapMargin) {
    const double curve_distance = (closest_.curve().evaluate(tau) - xz).norm();
    const double cap_distance = std::abs(std::abs(body_point.y()) - half_width_);
    if (cap_distance < curve_distance) return SurfaceAssignment::cap(body_point.y() >= 0.0);
  }
  return SurfaceAssignment::extrusion(tau);
}

SurfaceAssignment assign_surface(const ObjectState& state, const ShapeModel& model,
                                 const Vec3& body_point) {
  return SurfaceQuery(state, model).assign(body_point);
}

PseudoMeasurementLinearization linearize_pseudo_measurement(const ObjectState& state,
                                                            const PointMeasurement& measurement,
                                                            const SurfaceAssignment& assignment,
                                                            const Eigen::VectorXd& basis_weights) {
  const double c = std::cos(state.heading());
  const double s = std::sin(state.heading());
  const Vec3& y = measurement.position;
  const double dx = y.x() - state[ObjectState::kX];
  const double dy = y.y() - state[ObjectState::kY];
  const double bx = c * dx + s * dy;
  const double by = -s * dx + c * dy;
  const double bz = y.z() - state[ObjectState::kZ];
  const Eigen::Index dim = state.dim();

  PseudoMeasurementLinearization lin;
  if (assignment.is_cap()) {
    const double sign = assignment.cap_sign();
    lin.residual.resize(1);
    lin.residual(0) = by - sign * 0.5 * state.width();
    lin.wrt_state = Eigen::MatrixXd::Zero(1, dim);
    lin.wrt_state(0, ObjectState::kX) = s;
    lin.wrt_state(0, ObjectState::kY) = -c;
    lin.wrt_state(0, ObjectState::kHeading) = -bx;
    lin.wrt_state(0, ObjectState::kWidth) = -0.5 * sign;
    lin.wrt_noise.resize(1, 3);
    lin.wrt_noise << s, -c, 0.0;
    return lin;
  }

  const std::size_t n = state.control_points();
  double sx = 0.0;
  double sz = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = basis_weights(static_cast<Eigen::Index>(i));
    sx += w * state[ObjectState::control_x_index(i)];
    sz += w * state[ObjectState::control_z_index(i)];
  }
  lin.residual.resize(2);
  lin.residual << bx - sx, bz - sz;
  lin.wrt_state = Eigen::MatrixXd::Zero(2, dim);
  lin.wrt_state(0, ObjectState::kX) = -c;
  lin.wrt_state(0, ObjectState::kY) = -s;
  lin.wrt_state(0, ObjectState::kHeading) = by;
  lin.wrt_state(1, ObjectState::kZ) = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = basis_weights(static_cast<Eigen::Index>(i));
    lin.wrt_state(0, ObjectState::control_x_index(i)) = -w;
    lin.wrt_state(1, ObjectState::control_z_index(i)) = -w;
  }
  lin.wrt_noise.resize(2, 3);
  lin.wrt_noise << -c, -s, 0.0, 0.0, 0.0, -1.0;
  return lin;
}

namespace {

Eigen::VectorXd weights_for(const ObjectState& state, const ShapeModel& model,
                            const SurfaceAssignment& assignment) {
  if (assignment.is_cap()) return Eigen::VectorXd();
  if (!assignment.tau) throw std::invalid_argument("extrusion assignment without tau");
  return model.profile(state).basis_row(*assignment.tau);
}

}  // namespace

Eigen::VectorXd pseudo_measurement(const ObjectState& state, const ShapeModel& model,
                                   const PointMeasurement& measurement,
                                   const SurfaceAssignment& assignment) {
  return linearize_pseudo_measurement(state, measurement, assignment,
                                      weights_for(state, model, assignment))
      .residual;
}

PseudoMeasurementLinearization pseudo_measurement_jacobians(const ObjectState& state,
                                                            const ShapeModel& model,
                                                            const PointMeasurement& measurement,
                                                            const SurfaceAssignment& assignment) {
  return linearize_pseudo_measurement(state, measurement, assignment,
                                      weights_for(state, model, assignment));
}

std::vector<SurfaceSample> sample_surface_with_normals(const ObjectState& state,
                                                       const ShapeModel& model,
                                                       std::size_t count_extrusion,
                                                       std::size_t count_caps,
                                                       std::uint64_t seed) {
  std::vector<SurfaceSample> out;
  if (count_extrusion == 0 && count_caps == 0) return out;
  out.reserve(count_extrusion + count_caps);

  const BSplineCurve profile = model.profile(state);
  const Polygon2 region = profile_polygon(profile, 16);
  const double orientation = signed_area(region) >= 0.0 ? 1.0 : -1.0;
  const double half = 0.5 * state.width();
  const double c = std::cos(state.heading());
  const double s = std::sin(state.heading());
  auto rotate = [c, s](const Vec3& v) {
    return Vec3(c * v.x() - s * v.y(), s * v.x() + c * v.y(), v.z());
  };

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto [lo, hi] = profile.domain();

  for (std::size_t k = 0; k < count_extrusion; ++k) {
    const double tau = lo + (hi - lo) * unit(rng);
    const double y = -half + 2.0 * half * unit(rng);
    const Vec2 p = profile.evaluate(tau);
    const Vec2 t = profile.derivative(tau);
    Vec3 normal(orientation * t.y(), 0.0, -orientation * t.x());
    const double len = normal.norm();
    normal = len > 0.0 ? Vec3(normal / len) : Vec3::Zero();
    out.push_back({to_global(state, Vec3(p.x(), y, p.y())), rotate(normal),
                   SurfaceAssignment::extrusion(tau)});
  }

  if (count_caps > 0 && region.size() >= 3) {
    Vec2 min = region.front();
    Vec2 max = region.front();
    for (const Vec2& v : region) {
      min = min.cwiseMin(v);
      max = max.cwiseMax(v);
    }
    const std::size_t max_attempts = 1000 * count_caps;
    std::size_t produced = 0;
    for (std::size_t attempt = 0; attempt < max_attempts && produced < count_caps; ++attempt) {
      const Vec2 q(min.x() + (max.x() - min.x()) * unit(rng),
                   min.y() + (max.y() - min.y()) * unit(rng));
      const bool positive = unit(rng) < 0.5;
      if (!point_in_polygon(region, q)) continue;
      const double sign = positive ? 1.0 : -1.0;
      out.push_back({to_global(state, Vec3(q.x(), sign * half, q.y())),
                     rotate(Vec3(0.0, sign, 0.0)), SurfaceAssignment::cap(positive)});
      ++produced;
    }
  }
  return out;
}

std::vector<Vec3> sample_surface(const ObjectState& state, const ShapeModel& model,
                                 std::size_t count_extrusion, std::size_t count_caps,
                                 std::uint64_t seed) {
  const auto samples = sample_surface_with_normals(state, model, count_extrusion, count_caps, seed);
  std::vector<Vec3> out;
  out.reserve(samples.size());
  for (const auto& sample : samples) out.push_back(sample.point);
  return out;
}

}  // namespace bseot
