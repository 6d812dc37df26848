#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Core>

#include "occtrack/feature.hpp"
#include "occtrack/geometry.hpp"
#include "occtrack/visibility.hpp"

namespace occtrack {

using VecX = Eigen::VectorXd;

/// Unit-norm appearance vector.
class Embedding {
 public:
  Embedding() = default;

  /// Throws InvalidArgument for a zero or non-finite vector.
  static Embedding normalized(const VecX& raw);
  /// Keeps stored values bit for bit; they must already have unit norm.
  static Embedding from_unit(const VecX& values, double tolerance = 1e-9);

  const VecX& values() const noexcept { return values_; }
  Eigen::Index dim() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.size() == 0; }

 private:
  explicit Embedding(VecX v) : values_(std::move(v)) {}
  VecX values_;
};

/// Tracked hypothesis.
struct Query {
  std::int64_t track_id = 0;
  ObjectState3D anchor;
  Embedding memory;
  VecX descriptor;  // conditioning vector for keypoint weighting
  double confidence = 0.0;
  int age = 0;  // frames since the last matched observation
  // Last matched observation, used for finite-difference velocity refinement.
  Vec3 last_observed_center = Vec3::Zero();
  double last_observed_time = 0.0;
};

struct ViewFeature {
  VecX value;
  bool valid = false;
};

/// Keypoint-aligned feature for one camera: each keypoint in front of the
/// camera is sampled on every pyramid level (pixel coordinates mapped to cell
/// coordinates per level), averaged over levels, and the keypoints are blended
/// with softmax(descriptor . feature / sqrt(D)) weights.
ViewFeature extract_view_feature(const FeaturePyramid& pyramid, const CameraModel& cam,
                                 const KeypointSet& keypoints, const VecX& descriptor);

inline ViewFeature extract_view_feature(const FeaturePyramid& pyramid, const CameraModel& cam,
                                        const KeypointSet& keypoints, const Query& query) {
  return extract_view_feature(pyramid, cam, keypoints, query.descriptor);
}

inline constexpr double kDefaultVisibilityFloor = 1e-3;

struct FusionResult {
  Embedding embedding;  // empty when all_occluded
  VecX fused;           // visibility-weighted mean before normalization
  double visibility_sum = 0.0;
  bool all_occluded = false;
};

/// f = sum(v_i * g_i) / sum(v_i), then unit-normalized. Invalid views count as
/// visibility 0. When sum(v) <= v_floor (or the fused vector is zero) the
/// result is flagged all_occluded and the caller keeps its memory embedding.
FusionResult fuse_embedding(std::span<const ViewFeature> per_view,
                            std::span<const VisibilityScore> visibility,
                            double v_floor = kDefaultVisibilityFloor);

}  // namespace occtrack
