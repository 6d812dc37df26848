#include <array>
#include <cstring>

#include "msda_common.hpp"
#include "occtrack/error.hpp"
#include "occtrack/feature.hpp"
#include "occtrack/parallel.hpp"

#if defined(__AVX2__) && defined(__F16C__)
#include <immintrin.h>
#define OCCTRACK_MSDA_AVX2 1
#endif

namespace occtrack {
namespace {

// Descriptor for one sample tuple, filled one step ahead of consumption.
struct Stage {
  const float* rows[4];
  const Half* half_rows[4];
  float corner[4];
  float weight;
};

inline void prefetch_rows(const void* const* rows, std::size_t bytes) noexcept {
  for (int k = 0; k < 4; ++k) {
    const char* p = static_cast<const char*>(rows[k]);
    for (std::size_t off = 0; off < bytes; off += 64) __builtin_prefetch(p + off, 0, 3);
  }
}

inline float round_half(float x) noexcept { return half_bits_to_float(float_to_half_bits(x)); }

class Worker {
 public:
  Worker(int channels, PrecisionMode precision)
      : channels_(static_cast<std::size_t>(channels)),
        precision_(precision),
        zero_(channels_, 0.0f),
        zero_half_(channels_),
        acc_half_(channels_) {}

  void run(const detail::PyramidIndex& index, const SamplePlan& plan, WeightNormalization norm,
           std::size_t begin, std::size_t end, MsdaResult& result) {
    for (std::size_t q = begin; q < end; ++q) {
      if (!detail::prepare_query(index, plan.queries[q], norm, prepared_)) {
        result.empty[q] = 1;
        continue;
      }
      float* out = result.values.data() + q * channels_;
      if (precision_ == PrecisionMode::Full) {
        accumulate_full(out);
      } else {
        accumulate_half(out);
      }
    }
  }

 private:
  Stage stage(const detail::PreparedTuple& t) const noexcept {
    const FeatureLevel& l = t.pyramid->level(static_cast<std::size_t>(t.level));
    const detail::Footprint f = detail::footprint(t.u, t.v, l.width, l.height);
    Stage s;
    for (int k = 0; k < 4; ++k) {
      const int x = f.x0 + (k & 1);
      const int y = f.y0 + (k >> 1);
      const auto level = static_cast<std::size_t>(t.level);
      s.rows[k] = f.inside[k] ? t.pyramid->cell(level, x, y) : zero_.data();
      s.half_rows[k] = f.inside[k] ? t.pyramid->cell_half(level, x, y) : zero_half_.data();
      s.corner[k] = f.weight[k];
    }
    s.weight = t.weight;
    return s;
  }

  // Double-buffered walk over the prepared tuples: while slot `cur` is being
  // consumed, slot `cur ^ 1` already holds the next descriptor and its rows
  // have been requested from memory.
  template <typename Consume>
  void walk(bool half_rows, Consume&& consume) {
    std::array<Stage, 2> slots;
    slots[0] = stage(prepared_[0]);
    int cur = 0;
    for (std::size_t i = 0; i < prepared_.size(); ++i) {
      if (i + 1 < prepared_.size()) {
        slots[cur ^ 1] = stage(prepared_[i + 1]);
        if (half_rows) {
          prefetch_rows(reinterpret_cast<const void* const*>(slots[cur ^ 1].half_rows),
                        channels_ * sizeof(Half));
        } else {
          prefetch_rows(reinterpret_cast<const void* const*>(slots[cur ^ 1].rows),
                        channels_ * sizeof(float));
        }
      }
      consume(slots[cur]);
      cur ^= 1;
    }
  }

  void accumulate_full(float* out) {
    walk(false, [&](const Stage& s) {
      std::size_t c = 0;
#if defined(OCCTRACK_MSDA_AVX2)
      const __m256 w0 = _mm256_set1_ps(s.corner[0]);
      const __m256 w1 = _mm256_set1_ps(s.corner[1]);
      const __m256 w2 = _mm256_set1_ps(s.corner[2]);
      const __m256 w3 = _mm256_set1_ps(s.corner[3]);
      const __m256 wq = _mm256_set1_ps(s.weight);
      for (; c + 8 <= channels_; c += 8) {
        __m256 v = _mm256_mul_ps(w0, _mm256_loadu_ps(s.rows[0] + c));
        v = _mm256_add_ps(v, _mm256_mul_ps(w1, _mm256_loadu_ps(s.rows[1] + c)));
        v = _mm256_add_ps(v, _mm256_mul_ps(w2, _mm256_loadu_ps(s.rows[2] + c)));
        v = _mm256_add_ps(v, _mm256_mul_ps(w3, _mm256_loadu_ps(s.rows[3] + c)));
        _mm256_storeu_ps(out + c, _mm256_add_ps(_mm256_loadu_ps(out + c), _mm256_mul_ps(wq, v)));
      }
#endif
      // Portable packed-pair path, also the tail of the vector loop.
      for (; c < channels_; c += 2) {
        float v0 = s.corner[0] * s.rows[0][c];
        float v1 = s.corner[0] * s.rows[0][c + 1];
        for (int k = 1; k < 4; ++k) {
          v0 = v0 + s.corner[k] * s.rows[k][c];
          v1 = v1 + s.corner[k] * s.rows[k][c + 1];
        }
        out[c] = out[c] + s.weight * v0;
        out[c + 1] = out[c + 1] + s.weight * v1;
      }
    });
  }

  void accumulate_half(float* out) {
    std::fill(acc_half_.begin(), acc_half_.end(), Half{});
    walk(true, [&](const Stage& s) {
      float corner[4];
      for (int k = 0; k < 4; ++k) corner[k] = round_half(s.corner[k]);
      const float weight = round_half(s.weight);
      std::size_t c = 0;
#if defined(OCCTRACK_MSDA_AVX2)
      constexpr int kRound = _MM_FROUND_TO_NEAREST_INT;
      auto rh = [](__m256 x) { return _mm256_cvtph_ps(_mm256_cvtps_ph(x, kRound)); };
      auto load = [](const Half* p) {
        return _mm256_cvtph_ps(_mm_loadu_si128(reinterpret_cast<const __m128i*>(p)));
      };
      const __m256 w0 = _mm256_set1_ps(corner[0]);
      const __m256 w1 = _mm256_set1_ps(corner[1]);
      const __m256 w2 = _mm256_set1_ps(corner[2]);
      const __m256 w3 = _mm256_set1_ps(corner[3]);
      const __m256 wq = _mm256_set1_ps(weight);
      for (; c + 8 <= channels_; c += 8) {
        __m256 v = rh(_mm256_mul_ps(w0, load(s.half_rows[0] + c)));
        v = rh(_mm256_add_ps(v, rh(_mm256_mul_ps(w1, load(s.half_rows[1] + c)))));
        v = rh(_mm256_add_ps(v, rh(_mm256_mul_ps(w2, load(s.half_rows[2] + c)))));
        v = rh(_mm256_add_ps(v, rh(_mm256_mul_ps(w3, load(s.half_rows[3] + c)))));
        const __m256 acc = _mm256_add_ps(load(acc_half_.data() + c), rh(_mm256_mul_ps(wq, v)));
        _mm_storeu_si128(reinterpret_cast<__m128i*>(acc_half_.data() + c),
                         _mm256_cvtps_ph(acc, kRound));
      }
#endif
      for (; c < channels_; c += 2) {
        for (std::size_t lane = c; lane < c + 2; ++lane) {
          float v = round_half(corner[0] * to_float(s.half_rows[0][lane]));
          for (int k = 1; k < 4; ++k) {
            v = round_half(v + round_half(corner[k] * to_float(s.half_rows[k][lane])));
          }
          acc_half_[lane] = to_half(to_float(acc_half_[lane]) + round_half(weight * v));
        }
      }
    });
    convert_to_float(acc_half_, std::span<float>(out, channels_));
  }

  std::size_t channels_;
  PrecisionMode precision_;
  std::vector<float> zero_;
  std::vector<Half> zero_half_;
  std::vector<Half> acc_half_;
  std::vector<detail::PreparedTuple> prepared_;
};

}  // namespace

MsdaResult msda_optimized(std::span<const FeaturePyramid> pyramids, const SamplePlan& plan,
                          PrecisionMode precision, const MsdaOptions& options) {
  const detail::PyramidIndex index(pyramids);
  const int channels = index.channels();
  if (channels % 2 != 0) {
    throw Error(ErrorKind::OddChannelCount, "packed-pair aggregation needs an even channel count");
  }
  MsdaResult result;
  result.channels = channels;
  result.values.assign(plan.queries.size() * static_cast<std::size_t>(channels), 0.0f);
  result.empty.assign(plan.queries.size(), 0);

  parallel_for_chunks(plan.queries.size(), options.workers, [&](std::size_t begin, std::size_t end) {
    Worker worker(channels, precision);
    worker.run(index, plan, options.normalization, begin, end, result);
  });
  return result;
}

}  // namespace occtrack
