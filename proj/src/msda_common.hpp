#pragma once

// Internal helpers shared by the reference and optimized aggregation paths.
// Both paths must agree on tuple order, normalized weights and corner weights
// bit for bit, so those pieces live in exactly one place.

#include <cmath>
#include <span>
#include <vector>

#include "occtrack/feature.hpp"

namespace occtrack::detail {

class PyramidIndex {
 public:
  explicit PyramidIndex(std::span<const FeaturePyramid> pyramids);

  const FeaturePyramid& find(int camera_id) const;
  int channels() const noexcept { return channels_; }

 private:
  std::vector<std::pair<int, const FeaturePyramid*>> entries_;
  int channels_ = 0;
};

struct PreparedTuple {
  const FeaturePyramid* pyramid;
  int level;
  float u;
  float v;
  float weight;  // after normalization
};

/// Validates, sorts into canonical order and normalizes one query's tuples.
/// Returns false for an empty query (no tuples or zero weight sum).
bool prepare_query(const PyramidIndex& index, std::span<const SampleTuple> tuples,
                   WeightNormalization normalization, std::vector<PreparedTuple>& out);

/// Bilinear footprint: corner k is (x0 + (k & 1), y0 + (k >> 1)).
struct Footprint {
  int x0 = 0;
  int y0 = 0;
  float weight[4] = {0.0f, 0.0f, 0.0f, 0.0f};
  bool inside[4] = {false, false, false, false};
  bool any = false;
};

inline Footprint footprint(float u, float v, int width, int height) noexcept {
  Footprint f;
  if (!(u > -1.0f && u < static_cast<float>(width) && v > -1.0f &&
        v < static_cast<float>(height))) {
    return f;
  }
  const float fu = std::floor(u);
  const float fv = std::floor(v);
  f.x0 = static_cast<int>(fu);
  f.y0 = static_cast<int>(fv);
  const float ax = u - fu;
  const float ay = v - fv;
  const float bx = 1.0f - ax;
  const float by = 1.0f - ay;
  f.weight[0] = by * bx;
  f.weight[1] = by * ax;
  f.weight[2] = ay * bx;
  f.weight[3] = ay * ax;
  for (int k = 0; k < 4; ++k) {
    const int x = f.x0 + (k & 1);
    const int y = f.y0 + (k >> 1);
    f.inside[k] = x >= 0 && x < width && y >= 0 && y < height;
    f.any = f.any || f.inside[k];
  }
  return f;
}

}  // namespace occtrack::detail
