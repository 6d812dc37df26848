#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace occtrack {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kDepthEpsilon = 1e-6;

/// Wraps an angle into [-pi, pi).
double normalize_yaw(double yaw) noexcept;

/// Static pinhole camera. World-to-camera extrinsics: p_cam = R * p_world + t.
/// Camera axes: x right, y down, z forward (optical axis).
class CameraModel {
 public:
  CameraModel(int id, double focal_x, double focal_y, double principal_x, double principal_y,
              const Mat3& rotation_world_to_cam, const Vec3& translation_world_to_cam,
              int image_width, int image_height);

  /// Camera at `position` looking at `target` with world +z as the up hint.
  static CameraModel look_at(int id, const Vec3& position, const Vec3& target, double focal,
                             int image_width, int image_height);

  int id() const noexcept { return id_; }
  double focal_x() const noexcept { return fx_; }
  double focal_y() const noexcept { return fy_; }
  double principal_x() const noexcept { return cx_; }
  double principal_y() const noexcept { return cy_; }
  const Mat3& rotation() const noexcept { return rotation_; }
  const Vec3& translation() const noexcept { return translation_; }
  int image_width() const noexcept { return width_; }
  int image_height() const noexcept { return height_; }

  Vec3 to_camera(const Vec3& world) const { return rotation_ * world + translation_; }
  Vec3 center() const { return -rotation_.transpose() * translation_; }

 private:
  int id_;
  double fx_, fy_, cx_, cy_;
  Mat3 rotation_;
  Vec3 translation_;
  int width_, height_;
};

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

/// Throws Error(BehindCamera) when depth <= depth_epsilon. Coordinates are not
/// clipped to the image.
Projection project_point(const CameraModel& cam, const Vec3& world,
                         double depth_epsilon = kDepthEpsilon);

/// Inverse of project_point for a known depth.
Vec3 back_project(const CameraModel& cam, double u, double v, double depth);

/// Ten-parameter box + velocity state. Dimensions are strictly positive and yaw
/// is kept in [-pi, pi).
class ObjectState3D {
 public:
  ObjectState3D() = default;
  ObjectState3D(const Vec3& center, double w, double l, double h, double yaw,
                const Vec3& velocity = Vec3::Zero());

  static ObjectState3D from_array(std::span<const double, 10> params);
  std::array<double, 10> to_array() const;

  const Vec3& center() const noexcept { return center_; }
  double w() const noexcept { return w_; }
  double l() const noexcept { return l_; }
  double h() const noexcept { return h_; }
  double yaw() const noexcept { return yaw_; }
  const Vec3& velocity() const noexcept { return velocity_; }

  void set_center(const Vec3& c) { center_ = c; }
  void set_velocity(const Vec3& v) { velocity_ = v; }
  void set_yaw(double yaw) { yaw_ = normalize_yaw(yaw); }
  void set_dims(double w, double l, double h);

  double volume() const noexcept { return w_ * l_ * h_; }

  /// Maps a point in the box frame (x along l, y along w, z along h) to world.
  Vec3 local_to_world(const Vec3& local) const;

 private:
  Vec3 center_ = Vec3::Zero();
  double w_ = 1.0, l_ = 1.0, h_ = 1.0;
  double yaw_ = 0.0;
  Vec3 velocity_ = Vec3::Zero();
};

/// Bit 0 of the corner index picks the sign along l, bit 1 along w, bit 2
/// along h; a clear bit means the positive half-extent, so corner 0 is
/// (+l/2, +w/2, +h/2) in the box frame.
std::array<Vec3, 8> box_corners(const ObjectState3D& state);

enum class KeypointKind : std::uint8_t { Fixed, Learned };

struct KeypointSet {
  std::vector<Vec3> points;
  std::vector<KeypointKind> kinds;

  std::size_t size() const noexcept { return points.size(); }
};

inline constexpr std::size_t kFixedKeypointCount = 7;

/// Center, the six face centers (+x,-x,+y,-y,+z,-z in the box frame), then one
/// learned point per offset. Offsets are unitless in [-1, 1] and scale the half
/// extents (l/2, w/2, h/2).
KeypointSet generate_keypoints(const ObjectState3D& state, std::span<const Vec3> learned_offsets);

KeypointSet motion_compensate(const KeypointSet& keypoints, const Vec3& velocity, double dt);

}  // namespace occtrack
