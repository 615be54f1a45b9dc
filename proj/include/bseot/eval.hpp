#pragma once

#include "bseot/ekf.hpp"
#include "bseot/shape.hpp"

#include <span>

namespace bseot {

struct FrameMetrics {
  double timestamp = 0.0;
  double position_error = 0.0;     ///< planar, m
  double z_error = 0.0;            ///< signed, estimate minus truth, m
  double orientation_error = 0.0;  ///< wrapped to (-pi, pi]
  double side_iou = 0.0;
};

enum class IoUVariant {
  shape_only,    ///< body-frame profiles, each relative to its own reference point
  pose_included  ///< estimate placed in the truth's body x-z slice
};

struct MetricOptions {
  bool fold_orientation = false;  ///< fold heading error modulo pi
  IoUVariant iou_variant = IoUVariant::shape_only;
  int samples_per_span = 16;
};

/// Intersection over union of two simple polygons. Throws
/// DegenerateProfileError for self-intersecting or empty input.
double iou(const Polygon2& a, const Polygon2& b);

double polygon_area(const Polygon2& polygon);

/// Position, height and heading errors only; side_iou is left at 0.
FrameMetrics pose_metrics(const GaussianEstimate& estimate, const ObjectState& truth,
                          const MetricOptions& options = {});

FrameMetrics frame_metrics(const GaussianEstimate& estimate, const ShapeModel& estimate_model,
                           const ObjectState& truth, const Polygon2& truth_profile,
                           const MetricOptions& options = {});

/// Throws std::invalid_argument for an empty series.
double rmse(std::span<const double> series);

}  // namespace bseot
