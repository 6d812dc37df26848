#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "occtrack/json_io.hpp"
#include "occtrack/oae.hpp"

namespace occtrack {

struct LabeledEmbedding {
  VecX embedding;
  std::int64_t identity = 0;
};

struct DistanceStats {
  std::size_t count = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

inline constexpr double kReidHistogramWidth = 0.05;
inline constexpr std::size_t kReidHistogramBins = 40;  // covers [0, 2]

struct ReidReport {
  std::vector<double> cmc;  // cmc[k] = fraction of probes with a true match within rank k + 1
  double rank1 = 0.0;
  double mean_ap = 0.0;
  DistanceStats all;
  DistanceStats match;
  DistanceStats mismatch;
  std::vector<std::uint64_t> match_histogram;
  std::vector<std::uint64_t> mismatch_histogram;
};

/// Ranks the gallery by L2 distance for every probe (ties broken by gallery
/// order). Distances at or beyond 2 land in the last histogram bin.
ReidReport reid_evaluate(std::span<const LabeledEmbedding> gallery,
                         std::span<const LabeledEmbedding> probes);

json reid_report_to_json(const ReidReport& report);
std::vector<LabeledEmbedding> labeled_embeddings_from_json(const json& doc, const std::string& context);
json labeled_embeddings_to_json(std::span<const LabeledEmbedding> items);

}  // namespace occtrack
