#pragma once

// Data-parallel inner loops. Each kernel has a serial reference with the same
// signature; the OpenMP versions must produce identical output.

#include "bseot/shape.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace bseot::kernels {

/// Surface association of a batch of global-frame measurements against the
/// state the query was built from.
std::vector<SurfaceAssignment> assign_batch_serial(const SurfaceQuery& query,
                                                   const ObjectState& state,
                                                   std::span<const PointMeasurement> batch);
std::vector<SurfaceAssignment> assign_batch(const SurfaceQuery& query, const ObjectState& state,
                                            std::span<const PointMeasurement> batch);

/// Sensor viewing volume used for back-face culling and range/FOV limits.
struct ViewGeometry {
  Vec3 origin = Vec3::Zero();
  double yaw = 0.0;               ///< boresight azimuth (rad)
  double horizontal_fov = 6.2832; ///< full opening angle (rad)
  double min_elevation = -1.5708; ///< (rad)
  double max_elevation = 1.5708;  ///< (rad)
  double max_range = 200.0;       ///< (m)
};

bool visible(const ViewGeometry& view, const SurfaceSample& sample);

std::vector<std::uint8_t> visibility_mask_serial(const ViewGeometry& view,
                                                 std::span<const SurfaceSample> samples);
std::vector<std::uint8_t> visibility_mask(const ViewGeometry& view,
                                          std::span<const SurfaceSample> samples);

}  // namespace bseot::kernels
