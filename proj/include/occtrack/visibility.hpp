#pragma once

#include <span>

#include "occtrack/geometry.hpp"

namespace occtrack {

struct PixelRect {
  double u0 = 0.0, v0 = 0.0, u1 = 0.0, v1 = 0.0;

  double width() const noexcept { return u1 - u0; }
  double height() const noexcept { return v1 - v0; }
  double area() const noexcept { return width() * height(); }
  bool contains(double u, double v) const noexcept { return u >= u0 && u <= u1 && v >= v0 && v <= v1; }
};

struct ProjectedRect {
  PixelRect rect;
  double mean_depth = 0.0;
};

/// Tight image-plane bounding rectangle of the projected box corners, not
/// clipped to the image. Corners at depth <= epsilon are left out of both the
/// rectangle and the mean depth. Throws FullyBehindCamera when none remain.
ProjectedRect projected_rect(const CameraModel& cam, const ObjectState3D& state,
                             double depth_epsilon = kDepthEpsilon);

struct VisibilityScore {
  int camera_id = 0;
  int object_id = 0;
  double value = 0.0;
  bool behind_camera = false;
};

/// Fraction of a grid x grid lattice of sample points over the target's
/// projected rectangle that is inside the image and not covered by a nearer
/// blocker (nearer = strictly smaller mean corner depth). Blockers must not
/// include the target itself.
VisibilityScore visible_fraction(const CameraModel& cam, const ObjectState3D& target,
                                 std::span<const ObjectState3D> blockers, int grid,
                                 int object_id = 0);

}  // namespace occtrack
