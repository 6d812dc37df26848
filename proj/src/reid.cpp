#include "occtrack/reid.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>

#include "occtrack/error.hpp"

namespace occtrack {
namespace {

struct Accumulator {
  std::size_t count = 0;
  double sum = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();

  void add(double d) {
    ++count;
    sum += d;
    min = std::min(min, d);
    max = std::max(max, d);
  }
  DistanceStats stats() const {
    if (count == 0) return {};
    return {count, sum / static_cast<double>(count), min, max};
  }
};

std::size_t histogram_bin(double d) {
  const auto bin = static_cast<std::size_t>(std::max(0.0, d) / kReidHistogramWidth);
  return std::min(bin, kReidHistogramBins - 1);
}

}  // namespace

ReidReport reid_evaluate(std::span<const LabeledEmbedding> gallery,
                         std::span<const LabeledEmbedding> probes) {
  std::set<std::int64_t> gallery_ids;
  for (const auto& g : gallery) gallery_ids.insert(g.identity);
  if (gallery.empty() || gallery_ids.size() < 2) {
    throw Error(ErrorKind::DegenerateGallery, "gallery must contain at least two identities");
  }
  if (probes.empty()) throw Error(ErrorKind::InvalidArgument, "no probes given");
  const Eigen::Index dim = gallery.front().embedding.size();
  for (const auto& g : gallery) {
    if (g.embedding.size() != dim) throw Error(ErrorKind::LengthMismatch, "gallery embedding dimensions differ");
  }
  for (const auto& p : probes) {
    if (p.embedding.size() != dim) throw Error(ErrorKind::LengthMismatch, "probe embedding dimension differs");
    if (!gallery_ids.contains(p.identity)) {
      throw Error(ErrorKind::MissingIdentity, "probe identity " + std::to_string(p.identity) +
                                                  " is absent from the gallery");
    }
  }

  ReidReport report;
  report.cmc.assign(gallery.size(), 0.0);
  report.match_histogram.assign(kReidHistogramBins, 0);
  report.mismatch_histogram.assign(kReidHistogramBins, 0);
  Accumulator all, match, mismatch;

  std::vector<double> dist(gallery.size());
  std::vector<std::size_t> order(gallery.size());
  double ap_sum = 0.0;
  for (const auto& probe : probes) {
    for (std::size_t g = 0; g < gallery.size(); ++g) {
      dist[g] = (gallery[g].embedding - probe.embedding).norm();
      all.add(dist[g]);
      if (gallery[g].identity == probe.identity) {
        match.add(dist[g]);
        ++report.match_histogram[histogram_bin(dist[g])];
      } else {
        mismatch.add(dist[g]);
        ++report.mismatch_histogram[histogram_bin(dist[g])];
      }
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

    std::size_t hits = 0;
    double precision_sum = 0.0;
    std::size_t first_hit = gallery.size();
    for (std::size_t r = 0; r < order.size(); ++r) {
      if (gallery[order[r]].identity != probe.identity) continue;
      ++hits;
      precision_sum += static_cast<double>(hits) / static_cast<double>(r + 1);
      first_hit = std::min(first_hit, r);
    }
    ap_sum += precision_sum / static_cast<double>(hits);
    for (std::size_t r = first_hit; r < report.cmc.size(); ++r) report.cmc[r] += 1.0;
  }
  const auto n = static_cast<double>(probes.size());
  for (double& c : report.cmc) c /= n;
  report.rank1 = report.cmc.front();
  report.mean_ap = ap_sum / n;
  report.all = all.stats();
  report.match = match.stats();
  report.mismatch = mismatch.stats();
  return report;
}

namespace {
json stats_json(const DistanceStats& s) {
  return json{{"count", s.count}, {"mean", s.mean}, {"min", s.min}, {"max", s.max}};
}
}  // namespace

json reid_report_to_json(const ReidReport& r) {
  return json{{"schema_version", 1},
              {"cmc", r.cmc},
              {"rank1", r.rank1},
              {"map", r.mean_ap},
              {"distance", stats_json(r.all)},
              {"match_distance", stats_json(r.match)},
              {"mismatch_distance", stats_json(r.mismatch)},
              {"histogram",
               {{"bin_width", kReidHistogramWidth},
                {"range", {0.0, kReidHistogramWidth * kReidHistogramBins}},
                {"match", r.match_histogram},
                {"mismatch", r.mismatch_histogram}}}};
}

std::vector<LabeledEmbedding> labeled_embeddings_from_json(const json& doc, const std::string& context) {
  StrictObject top(doc, context);
  if (top.get<int>("schema_version") != 1) {
    throw Error(ErrorKind::ConfigParseError, context + ": unsupported schema_version");
  }
  const json& items = top.at("items");
  top.finish();
  if (!items.is_array()) throw Error(ErrorKind::ConfigParseError, context + ".items: expected an array");
  std::vector<LabeledEmbedding> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    StrictObject o(items[i], context + ".items[" + std::to_string(i) + "]");
    LabeledEmbedding e;
    e.identity = o.get<std::int64_t>("identity");
    const auto values = o.get<std::vector<double>>("embedding");
    o.finish();
    e.embedding = Eigen::Map<const VecX>(values.data(), static_cast<Eigen::Index>(values.size()));
    out.push_back(std::move(e));
  }
  return out;
}

json labeled_embeddings_to_json(std::span<const LabeledEmbedding> items) {
  json arr = json::array();
  for (const auto& e : items) {
    arr.push_back({{"identity", e.identity},
                   {"embedding", std::vector<double>(e.embedding.data(), e.embedding.data() + e.embedding.size())}});
  }
  return json{{"schema_version", 1}, {"items", std::move(arr)}};
}

}  // namespace occtrack
