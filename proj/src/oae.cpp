#include "occtrack/oae.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "occtrack/error.hpp"

namespace occtrack {

Embedding Embedding::normalized(const VecX& raw) {
  const double norm = raw.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorKind::InvalidArgument, "cannot normalize a zero or non-finite embedding");
  }
  return Embedding(raw / norm);
}

Embedding Embedding::from_unit(const VecX& values, double tolerance) {
  const double norm = values.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > tolerance) {
    throw Error(ErrorKind::InvalidArgument, "embedding is not unit-norm (norm " + std::to_string(norm) + ")");
  }
  return Embedding(values);
}

ViewFeature extract_view_feature(const FeaturePyramid& pyramid, const CameraModel& cam,
                                 const KeypointSet& keypoints, const VecX& descriptor) {
  const Eigen::Index dim = descriptor.size();
  if (pyramid.channels() != dim) {
    throw Error(ErrorKind::ChannelMismatch, "pyramid channels (" + std::to_string(pyramid.channels()) +
                                                ") differ from descriptor dimension (" +
                                                std::to_string(dim) + ")");
  }

  std::vector<VecX> per_keypoint;
  per_keypoint.reserve(keypoints.size());
  for (const Vec3& p : keypoints.points) {
    Projection proj;
    try {
      proj = project_point(cam, p);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::BehindCamera) continue;
      throw;
    }
    VecX mean = VecX::Zero(dim);
    for (std::size_t l = 0; l < pyramid.num_levels(); ++l) {
      const double stride = pyramid.level(l).stride;
      const std::vector<float> s =
          bilinear_sample(pyramid, l, static_cast<float>(pixel_to_cell(proj.u, stride)),
                          static_cast<float>(pixel_to_cell(proj.v, stride)));
      for (Eigen::Index c = 0; c < dim; ++c) mean[c] += s[static_cast<std::size_t>(c)];
    }
    mean /= static_cast<double>(pyramid.num_levels());
    per_keypoint.push_back(std::move(mean));
  }

  ViewFeature out;
  out.value = VecX::Zero(dim);
  if (per_keypoint.empty()) return out;

  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  std::vector<double> logits(per_keypoint.size());
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < per_keypoint.size(); ++k) {
    logits[k] = descriptor.dot(per_keypoint[k]) * scale;
    max_logit = std::max(max_logit, logits[k]);
  }
  double total = 0.0;
  for (double& l : logits) {
    l = std::exp(l - max_logit);
    total += l;
  }
  for (std::size_t k = 0; k < per_keypoint.size(); ++k) out.value += (logits[k] / total) * per_keypoint[k];
  out.valid = true;
  return out;
}

FusionResult fuse_embedding(std::span<const ViewFeature> per_view,
                            std::span<const VisibilityScore> visibility, double v_floor) {
  if (per_view.size() != visibility.size()) {
    throw Error(ErrorKind::LengthMismatch, "per-view features and visibility scores differ in length");
  }
  if (per_view.empty()) throw Error(ErrorKind::InvalidArgument, "fusion needs at least one view");

  Eigen::Index dim = -1;
  for (const ViewFeature& f : per_view) {
    if (!f.valid) continue;
    if (dim < 0) dim = f.value.size();
    if (f.value.size() != dim) throw Error(ErrorKind::LengthMismatch, "per-view feature dimensions differ");
  }

  FusionResult result;
  result.fused = VecX::Zero(std::max<Eigen::Index>(dim, 0));
  for (std::size_t i = 0; i < per_view.size(); ++i) {
    const double v = visibility[i].value;
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::InvalidArgument, "visibility must lie in [0, 1]");
    if (!per_view[i].valid || v == 0.0) continue;
    result.fused += v * per_view[i].value;
    result.visibility_sum += v;
  }
  if (!(result.visibility_sum > v_floor)) {
    result.all_occluded = true;
    return result;
  }
  result.fused /= result.visibility_sum;
  if (!(result.fused.norm() > 0.0)) {
    result.all_occluded = true;
    return result;
  }
  result.embedding = Embedding::normalized(result.fused);
  return result;
}

}  // namespace occtrack
