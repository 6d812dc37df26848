#include "occtrack/feature.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "msda_common.hpp"
#include "occtrack/error.hpp"

namespace occtrack {

FeaturePyramid::FeaturePyramid(int camera_id, int channels, std::vector<FeatureLevel> levels)
    : camera_id_(camera_id), channels_(channels), levels_(std::move(levels)) {
  if (channels_ <= 0) throw Error(ErrorKind::InvalidArgument, "pyramid channel count must be positive");
  if (channels_ % 2 != 0) {
    throw Error(ErrorKind::OddChannelCount, "pyramid channel count must be even");
  }
  if (levels_.empty()) throw Error(ErrorKind::InvalidArgument, "pyramid needs at least one level");
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    const FeatureLevel& l = levels_[i];
    if (l.height < 1 || l.width < 1 || !(l.stride > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "pyramid level " + std::to_string(i) + " is malformed");
    }
    if (l.values.size() != static_cast<std::size_t>(l.height) * l.width * channels_) {
      throw Error(ErrorKind::LengthMismatch,
                  "pyramid level " + std::to_string(i) + " value count does not match its shape");
    }
    if (i > 0 && !(l.stride > levels_[i - 1].stride)) {
      throw Error(ErrorKind::InvalidArgument, "pyramid strides must strictly increase");
    }
  }
  half_.reserve(levels_.size());
  for (const FeatureLevel& l : levels_) {
    std::vector<Half> h(l.values.size());
    convert_to_half(l.values, h);
    half_.push_back(std::move(h));
  }
}

std::vector<float> bilinear_sample(const FeaturePyramid& pyr, std::size_t level, float u, float v) {
  if (level >= pyr.num_levels()) {
    throw Error(ErrorKind::MissingPyramid, "pyramid level " + std::to_string(level) + " does not exist");
  }
  const int channels = pyr.channels();
  std::vector<float> out(static_cast<std::size_t>(channels), 0.0f);
  const FeatureLevel& l = pyr.level(level);
  const detail::Footprint f = detail::footprint(u, v, l.width, l.height);
  if (!f.any) return out;

  const float* rows[4];
  for (int k = 0; k < 4; ++k) {
    rows[k] = f.inside[k] ? pyr.cell(level, f.x0 + (k & 1), f.y0 + (k >> 1)) : nullptr;
  }
  for (int c = 0; c < channels; ++c) {
    float s = f.weight[0] * (rows[0] ? rows[0][c] : 0.0f);
    s = s + f.weight[1] * (rows[1] ? rows[1][c] : 0.0f);
    s = s + f.weight[2] * (rows[2] ? rows[2][c] : 0.0f);
    s = s + f.weight[3] * (rows[3] ? rows[3][c] : 0.0f);
    out[c] = s;
  }
  return out;
}

namespace detail {

PyramidIndex::PyramidIndex(std::span<const FeaturePyramid> pyramids) {
  for (const FeaturePyramid& p : pyramids) {
    if (channels_ == 0) channels_ = p.channels();
    if (p.channels() != channels_) {
      throw Error(ErrorKind::ChannelMismatch, "all pyramids must share one channel count");
    }
    entries_.emplace_back(p.camera_id(), &p);
  }
  std::sort(entries_.begin(), entries_.end());
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (entries_[i].first == entries_[i - 1].first) {
      throw Error(ErrorKind::InvalidArgument,
                  "duplicate pyramid for camera " + std::to_string(entries_[i].first));
    }
  }
}

const FeaturePyramid& PyramidIndex::find(int camera_id) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), camera_id,
                             [](const auto& e, int id) { return e.first < id; });
  if (it == entries_.end() || it->first != camera_id) {
    throw Error(ErrorKind::MissingPyramid, "no pyramid for camera " + std::to_string(camera_id));
  }
  return *it->second;
}

bool prepare_query(const PyramidIndex& index, std::span<const SampleTuple> tuples,
                   WeightNormalization normalization, std::vector<PreparedTuple>& out) {
  out.clear();
  for (const SampleTuple& t : tuples) {
    if (!std::isfinite(t.weight)) {
      throw Error(ErrorKind::NonFiniteWeight, "sample weight is not finite");
    }
    if (t.weight < 0.0f) throw Error(ErrorKind::InvalidArgument, "sample weight is negative");
    const FeaturePyramid& pyr = index.find(t.camera_id);
    if (t.level < 0 || static_cast<std::size_t>(t.level) >= pyr.num_levels()) {
      throw Error(ErrorKind::MissingPyramid, "camera " + std::to_string(t.camera_id) +
                                                 " has no level " + std::to_string(t.level));
    }
    out.push_back({&pyr, t.level, t.u, t.v, t.weight});
  }
  if (out.empty()) return false;

  std::sort(out.begin(), out.end(), [](const PreparedTuple& a, const PreparedTuple& b) {
    return std::make_tuple(a.pyramid->camera_id(), a.level, a.v, a.u, a.weight) <
           std::make_tuple(b.pyramid->camera_id(), b.level, b.v, b.u, b.weight);
  });

  float sum = 0.0f;
  for (const PreparedTuple& t : out) sum = sum + t.weight;
  if (sum == 0.0f) {
    out.clear();
    return false;
  }
  if (normalization == WeightNormalization::Renormalize) {
    for (PreparedTuple& t : out) t.weight = t.weight / sum;
  }
  return true;
}

}  // namespace detail

MsdaResult msda_reference(std::span<const FeaturePyramid> pyramids, const SamplePlan& plan,
                          WeightNormalization normalization) {
  const detail::PyramidIndex index(pyramids);
  const int channels = index.channels();
  MsdaResult result;
  result.channels = channels;
  result.values.assign(plan.queries.size() * static_cast<std::size_t>(channels), 0.0f);
  result.empty.assign(plan.queries.size(), 0);

  std::vector<detail::PreparedTuple> prepared;
  for (std::size_t q = 0; q < plan.queries.size(); ++q) {
    if (!detail::prepare_query(index, plan.queries[q], normalization, prepared)) {
      result.empty[q] = 1;
      continue;
    }
    float* out = result.values.data() + q * static_cast<std::size_t>(channels);
    for (const detail::PreparedTuple& t : prepared) {
      const std::vector<float> s = bilinear_sample(*t.pyramid, static_cast<std::size_t>(t.level), t.u, t.v);
      for (int c = 0; c < channels; ++c) out[c] = out[c] + t.weight * s[c];
    }
  }
  return result;
}

}  // namespace occtrack
