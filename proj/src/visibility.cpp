#include "occtrack/visibility.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include "occtrack/error.hpp"

namespace occtrack {

ProjectedRect projected_rect(const CameraModel& cam, const ObjectState3D& state, double depth_epsilon) {
  ProjectedRect out;
  double u0 = std::numeric_limits<double>::infinity(), v0 = u0;
  double u1 = -u0, v1 = -u0;
  double depth_sum = 0.0;
  int included = 0;
  for (const Vec3& corner : box_corners(state)) {
    const Vec3 p = cam.to_camera(corner);
    if (!(p.z() > depth_epsilon)) continue;
    const double u = cam.focal_x() * p.x() / p.z() + cam.principal_x();
    const double v = cam.focal_y() * p.y() / p.z() + cam.principal_y();
    u0 = std::min(u0, u);
    u1 = std::max(u1, u);
    v0 = std::min(v0, v);
    v1 = std::max(v1, v);
    depth_sum += p.z();
    ++included;
  }
  if (included == 0) {
    throw Error(ErrorKind::FullyBehindCamera, "every box corner is behind camera " + std::to_string(cam.id()));
  }
  out.rect = {u0, v0, u1, v1};
  out.mean_depth = depth_sum / included;
  return out;
}

VisibilityScore visible_fraction(const CameraModel& cam, const ObjectState3D& target,
                                 std::span<const ObjectState3D> blockers, int grid, int object_id) {
  if (grid < 2) throw Error(ErrorKind::InvalidArgument, "visibility grid must be >= 2");
  VisibilityScore score;
  score.camera_id = cam.id();
  score.object_id = object_id;

  ProjectedRect self;
  try {
    self = projected_rect(cam, target);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::FullyBehindCamera) throw;
    score.behind_camera = true;
    return score;
  }

  std::vector<PixelRect> nearer;
  for (const ObjectState3D& b : blockers) {
    try {
      const ProjectedRect r = projected_rect(cam, b);
      if (r.mean_depth < self.mean_depth) nearer.push_back(r.rect);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::FullyBehindCamera) throw;
    }
  }

  const double width = cam.image_width();
  const double height = cam.image_height();
  long visible = 0;
  for (int j = 0; j < grid; ++j) {
    const double v = self.rect.v0 + (j + 0.5) / grid * self.rect.height();
    if (!(v >= 0.0 && v < height)) continue;
    for (int i = 0; i < grid; ++i) {
      const double u = self.rect.u0 + (i + 0.5) / grid * self.rect.width();
      if (!(u >= 0.0 && u < width)) continue;
      const bool covered =
          std::any_of(nearer.begin(), nearer.end(), [&](const PixelRect& r) { return r.contains(u, v); });
      if (!covered) ++visible;
    }
  }
  score.value = static_cast<double>(visible) / (static_cast<double>(grid) * grid);
  return score;
}

}  // namespace occtrack
