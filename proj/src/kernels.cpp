#include "bseot/kernels.hpp"

#include <cmath>
#include <cstddef>

namespace bseot::kernels {

std::vector<SurfaceAssignment> assign_batch_serial(const SurfaceQuery& query,
                                                   const ObjectState& state,
                                                   std::span<const PointMeasurement> batch) {
  std::vector<SurfaceAssignment> out(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out[i] = query.assign(to_body(state, batch[i].position));
  }
  return out;
}

std::vector<SurfaceAssignment> assign_batch(const SurfaceQuery& query, const ObjectState& state,
                                            std::span<const PointMeasurement> batch) {
  std::vector<SurfaceAssignment> out(batch.size());
  const auto count = static_cast<std::ptrdiff_t>(batch.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = query.assign(to_body(state, batch[k].position));
  }
  return out;
}

bool visible(const ViewGeometry& view, const SurfaceSample& sample) {
  const Vec3 ray = sample.point - view.origin;
  const double range = ray.norm();
  if (range > view.max_range || range == 0.0) return false;
  // outward normal must face the sensor
  if (sample.normal.dot(-ray) <= 0.0) return false;
  const double azimuth = std::atan2(ray.y(), ray.x()) - view.yaw;
  if (std::abs(wrap_angle(azimuth)) > 0.5 * view.horizontal_fov) return false;
  const double elevation = std::atan2(ray.z(), std::hypot(ray.x(), ray.y()));
  return elevation >= view.min_elevation && elevation <= view.max_elevation;
}

std::vector<std::uint8_t> visibility_mask_serial(const ViewGeometry& view,
                                                 std::span<const SurfaceSample> samples) {
  std::vector<std::uint8_t> mask(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) mask[i] = visible(view, samples[i]) ? 1 : 0;
  return mask;
}

std::vector<std::uint8_t> visibility_mask(const ViewGeometry& view,
                                          std::span<const SurfaceSample> samples) {
  std::vector<std::uint8_t> mask(samples.size());
  const auto count = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    mask[k] = visible(view, samples[k]) ? 1 : 0;
  }
  return mask;
}

}  // namespace bseot::kernels
