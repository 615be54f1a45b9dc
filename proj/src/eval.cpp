#include "bseot/eval.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace bseot {

namespace bg = boost::geometry;

namespace {

using BgPoint = bg::model::d2::point_xy<double>;
using BgPolygon = bg::model::polygon<BgPoint>;
using BgMultiPolygon = bg::model::multi_polygon<BgPolygon>;

BgPolygon to_boost(const Polygon2& polygon, const Vec2& origin, double scale) {
  if (!is_simple(polygon)) throw DegenerateProfileError("polygon is empty or self-intersecting");
  BgPolygon out;
  for (const Vec2& v : polygon) {
    const Vec2 u = (v - origin) / scale;
    bg::append(out.outer(), BgPoint(u.x(), u.y()));
  }
  bg::correct(out);
  return out;
}

}  // namespace

double polygon_area(const Polygon2& polygon) { return std::abs(signed_area(polygon)); }

double iou(const Polygon2& a, const Polygon2& b) {
  // boost's collinearity tolerances are absolute, so work in a unit box
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  for (const Polygon2* p : {&a, &b}) {
    for (const Vec2& v : *p) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
  }
  const double extent = (hi - lo).maxCoeff();
  const double scale = std::isfinite(extent) && extent > 0.0 ? extent : 1.0;
  const BgPolygon pa = to_boost(a, lo, scale);
  const BgPolygon pb = to_boost(b, lo, scale);
  BgMultiPolygon inter;
  bg::intersection(pa, pb, inter);
  const double area_i = bg::area(inter);
  const double area_u = bg::area(pa) + bg::area(pb) - area_i;
  if (!(area_u > 0.0)) throw DegenerateProfileError("polygons have zero union area");
  return std::clamp(area_i / area_u, 0.0, 1.0);
}

FrameMetrics pose_metrics(const GaussianEstimate& estimate, const ObjectState& truth,
                          const MetricOptions& options) {
  const ObjectState& est = estimate.mean;
  FrameMetrics m;
  m.timestamp = estimate.timestamp;
  m.position_error = (est.position().head<2>() - truth.position().head<2>()).norm();
  m.z_error = est[ObjectState::kZ] - truth[ObjectState::kZ];
  double heading_error = wrap_angle(est.heading() - truth.heading());
  if (options.fold_orientation) {
    if (heading_error > 0.5 * std::numbers::pi) heading_error -= std::numbers::pi;
    if (heading_error <= -0.5 * std::numbers::pi) heading_error += std::numbers::pi;
  }
  m.orientation_error = heading_error;
  return m;
}

FrameMetrics frame_metrics(const GaussianEstimate& estimate, const ShapeModel& estimate_model,
                           const ObjectState& truth, const Polygon2& truth_profile,
                           const MetricOptions& options) {
  const ObjectState& est = estimate.mean;
  FrameMetrics m = pose_metrics(estimate, truth, options);
  Polygon2 est_profile = side_view_polygon(est, estimate_model, options.samples_per_span);
  if (options.iou_variant == IoUVariant::pose_included) {
    const double c = std::cos(truth.heading());
    const double s = std::sin(truth.heading());
    for (Vec2& v : est_profile) {
      const Vec3 g = to_global(est, Vec3(v.x(), 0.0, v.y()));
      const Vec3 d = g - truth.position();
      v = Vec2(c * d.x() + s * d.y(), d.z());
    }
  }
  m.side_iou = iou(est_profile, truth_profile);
  return m;
}

double rmse(std::span<const double> series) {
  if (series.empty()) throw std::invalid_argument("rmse of an empty series");
  double sum = 0.0;
  for (double v : series) sum += v * v;
  return std::sqrt(sum / static_cast<double>(series.size()));
}

}  // namespace bseot
