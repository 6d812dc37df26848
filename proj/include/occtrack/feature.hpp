#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "occtrack/half.hpp"

namespace occtrack {

/// One grid of a pyramid. Values are channels-last: values[(y * width + x) * C + c].
/// Cell (x, y) has its center at integer coordinates (x, y) in cell units; in
/// source-image pixels that center sits at ((x + 0.5) * stride, (y + 0.5) * stride).
struct FeatureLevel {
  int height = 0;
  int width = 0;
  double stride = 1.0;
  std::vector<float> values;
};

/// Per-camera multi-scale feature grids. Immutable after construction; a
/// 16-bit mirror of every level is built up front for the packed-half path.
class FeaturePyramid {
 public:
  FeaturePyramid(int camera_id, int channels, std::vector<FeatureLevel> levels);

  int camera_id() const noexcept { return camera_id_; }
  int channels() const noexcept { return channels_; }
  std::size_t num_levels() const noexcept { return levels_.size(); }
  const FeatureLevel& level(std::size_t i) const { return levels_.at(i); }
  const std::vector<FeatureLevel>& levels() const noexcept { return levels_; }

  const float* cell(std::size_t level, int x, int y) const noexcept {
    const FeatureLevel& l = levels_[level];
    return l.values.data() + (static_cast<std::size_t>(y) * l.width + x) * channels_;
  }
  const Half* cell_half(std::size_t level, int x, int y) const noexcept {
    const FeatureLevel& l = levels_[level];
    return half_[level].data() + (static_cast<std::size_t>(y) * l.width + x) * channels_;
  }

 private:
  int camera_id_;
  int channels_;
  std::vector<FeatureLevel> levels_;
  std::vector<std::vector<Half>> half_;
};

/// Converts a source-image pixel coordinate to cell coordinates on a level.
inline double pixel_to_cell(double pixel, double stride) noexcept { return pixel / stride - 0.5; }

/// Bilinear interpolation with zero padding: each of the four neighbouring
/// cells contributes only if it lies inside the grid.
std::vector<float> bilinear_sample(const FeaturePyramid& pyr, std::size_t level, float u, float v);

struct SampleTuple {
  int camera_id = 0;
  int level = 0;
  float u = 0.0f;  // cells
  float v = 0.0f;  // cells
  float weight = 0.0f;
};

struct SamplePlan {
  std::vector<std::vector<SampleTuple>> queries;
};

enum class WeightNormalization { Renormalize, AsGiven };

enum class PrecisionMode { Full, PackedHalf };

struct MsdaOptions {
  WeightNormalization normalization = WeightNormalization::Renormalize;
  unsigned workers = 1;
};

/// Query-major output, values[q * channels + c]. empty[q] is set (and the row
/// is zero) when the query has no tuples or its weights sum to zero.
struct MsdaResult {
  int channels = 0;
  std::vector<float> values;
  std::vector<std::uint8_t> empty;

  std::span<const float> row(std::size_t q) const {
    return {values.data() + q * static_cast<std::size_t>(channels),
            static_cast<std::size_t>(channels)};
  }
};

/// 32-bit scalar reference: out_q = sum over tuples of w_norm * bilinear_sample.
/// Tuples are summed in canonical order (camera, level, v, u, weight) so the
/// result does not depend on how a plan lists them.
MsdaResult msda_reference(std::span<const FeaturePyramid> pyramids, const SamplePlan& plan,
                          WeightNormalization normalization = WeightNormalization::Renormalize);

/// Same contract as msda_reference. Channels are processed as packed pairs
/// (four float pairs per 256-bit register on AVX2 builds), tuple descriptors are staged
/// one step ahead with the next tuple's rows prefetched, and queries are split
/// across `workers` threads. Full mode reproduces msda_reference bit for bit;
/// PackedHalf reads 16-bit features and keeps the accumulator in 16 bits until
/// writeback.
MsdaResult msda_optimized(std::span<const FeaturePyramid> pyramids, const SamplePlan& plan,
                          PrecisionMode precision, const MsdaOptions& options = {});

}  // namespace occtrack
