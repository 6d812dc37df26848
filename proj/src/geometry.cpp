#include "occtrack/geometry.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "occtrack/error.hpp"

namespace occtrack {

double normalize_yaw(double yaw) noexcept {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (yaw >= -std::numbers::pi && yaw < std::numbers::pi) return yaw;
  double wrapped = std::fmod(yaw + std::numbers::pi, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  wrapped -= std::numbers::pi;
  // fmod can land exactly on +pi after the shift for inputs just below a multiple.
  if (wrapped >= std::numbers::pi) wrapped -= kTwoPi;
  return wrapped;
}

CameraModel::CameraModel(int id, double focal_x, double focal_y, double principal_x,
                         double principal_y, const Mat3& rotation_world_to_cam,
                         const Vec3& translation_world_to_cam, int image_width, int image_height)
    : id_(id),
      fx_(focal_x),
      fy_(focal_y),
      cx_(principal_x),
      cy_(principal_y),
      rotation_(rotation_world_to_cam),
      translation_(translation_world_to_cam),
      width_(image_width),
      height_(image_height) {
  if (!(fx_ > 0.0) || !(fy_ > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "camera focal lengths must be positive");
  }
  if (width_ < 1 || height_ < 1) {
    throw Error(ErrorKind::InvalidArgument, "camera image extent must be at least 1x1");
  }
  const Mat3 gram = rotation_.transpose() * rotation_ - Mat3::Identity();
  if (gram.cwiseAbs().maxCoeff() > 1e-9 || rotation_.determinant() < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "camera rotation is not a proper orthonormal matrix");
  }
}

CameraModel CameraModel::look_at(int id, const Vec3& position, const Vec3& target, double focal,
                                 int image_width, int image_height) {
  const Vec3 forward = (target - position).normalized();
  Vec3 up_hint = Vec3::UnitZ();
  if (std::abs(forward.dot(up_hint)) > 0.999) up_hint = Vec3::UnitY();
  const Vec3 right = forward.cross(up_hint).normalized();
  const Vec3 down = forward.cross(right);
  Mat3 rot;
  rot.row(0) = right.transpose();
  rot.row(1) = down.transpose();
  rot.row(2) = forward.transpose();
  const Vec3 t = -rot * position;
  return CameraModel(id, focal, focal, image_width / 2.0, image_height / 2.0, rot, t,
                     image_width, image_height);
}

Projection project_point(const CameraModel& cam, const Vec3& world, double depth_epsilon) {
  const Vec3 p = cam.to_camera(world);
  if (!(p.z() > depth_epsilon)) {
    throw Error(ErrorKind::BehindCamera, "point depth is not in front of the camera");
  }
  return {cam.focal_x() * p.x() / p.z() + cam.principal_x(),
          cam.focal_y() * p.y() / p.z() + cam.principal_y(), p.z()};
}

Vec3 back_project(const CameraModel& cam, double u, double v, double depth) {
  const Vec3 p_cam((u - cam.principal_x()) * depth / cam.focal_x(),
                   (v - cam.principal_y()) * depth / cam.focal_y(), depth);
  return cam.rotation().transpose() * (p_cam - cam.translation());
}

ObjectState3D::ObjectState3D(const Vec3& center, double w, double l, double h, double yaw,
                             const Vec3& velocity)
    : center_(center), yaw_(normalize_yaw(yaw)), velocity_(velocity) {
  set_dims(w, l, h);
}

ObjectState3D ObjectState3D::from_array(std::span<const double, 10> p) {
  return ObjectState3D(Vec3(p[0], p[1], p[2]), p[3], p[4], p[5], p[6], Vec3(p[7], p[8], p[9]));
}

std::array<double, 10> ObjectState3D::to_array() const {
  return {center_.x(), center_.y(), center_.z(), w_, l_, h_, yaw_,
          velocity_.x(), velocity_.y(), velocity_.z()};
}

void ObjectState3D::set_dims(double w, double l, double h) {
  if (!(w > 0.0) || !(l > 0.0) || !(h > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "box dimensions must be strictly positive");
  }
  w_ = w;
  l_ = l;
  h_ = h;
}

Vec3 ObjectState3D::local_to_world(const Vec3& local) const {
  const double c = std::cos(yaw_);
  const double s = std::sin(yaw_);
  return center_ + Vec3(c * local.x() - s * local.y(), s * local.x() + c * local.y(), local.z());
}

std::array<Vec3, 8> box_corners(const ObjectState3D& state) {
  std::array<Vec3, 8> corners;
  for (int i = 0; i < 8; ++i) {
    const Vec3 local((i & 1) ? -state.l() / 2 : state.l() / 2,
                     (i & 2) ? -state.w() / 2 : state.w() / 2,
                     (i & 4) ? -state.h() / 2 : state.h() / 2);
    corners[i] = state.local_to_world(local);
  }
  return corners;
}

KeypointSet generate_keypoints(const ObjectState3D& state, std::span<const Vec3> learned_offsets) {
  for (const Vec3& off : learned_offsets) {
    if (!(off.cwiseAbs().maxCoeff() <= 1.0)) {
      throw Error(ErrorKind::OffsetOutOfRange, "learned keypoint offsets must lie in [-1, 1]");
    }
  }
  const Vec3 half(state.l() / 2, state.w() / 2, state.h() / 2);
  KeypointSet kp;
  kp.points.reserve(kFixedKeypointCount + learned_offsets.size());
  kp.kinds.reserve(kFixedKeypointCount + learned_offsets.size());

  kp.points.push_back(state.center());
  for (int axis = 0; axis < 3; ++axis) {
    for (double sign : {1.0, -1.0}) {
      Vec3 local = Vec3::Zero();
      local[axis] = sign * half[axis];
      kp.points.push_back(state.local_to_world(local));
    }
  }
  kp.kinds.assign(kFixedKeypointCount, KeypointKind::Fixed);

  for (const Vec3& off : learned_offsets) {
    kp.points.push_back(state.local_to_world(off.cwiseProduct(half)));
    kp.kinds.push_back(KeypointKind::Learned);
  }
  return kp;
}

KeypointSet motion_compensate(const KeypointSet& keypoints, const Vec3& velocity, double dt) {
  if (!(dt >= 0.0)) throw Error(ErrorKind::InvalidArgument, "motion compensation dt must be >= 0");
  KeypointSet out = keypoints;
  const Vec3 shift = velocity * dt;
  for (Vec3& p : out.points) p += shift;
  return out;
}

}  // namespace occtrack
