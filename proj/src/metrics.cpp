#include "occtrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <vector>

#include "occtrack/assignment.hpp"
#include "occtrack/error.hpp"
#include "occtrack/parallel.hpp"

namespace occtrack {
namespace {

using Point2 = Eigen::Vector2d;

std::vector<Point2> footprint(const ObjectState3D& s) {
  const double c = std::cos(s.yaw());
  const double sn = std::sin(s.yaw());
  const double hl = s.l() / 2, hw = s.w() / 2;
  // counter-clockwise in the box frame
  const std::array<Point2, 4> local{Point2(hl, -hw), Point2(hl, hw), Point2(-hl, hw), Point2(-hl, -hw)};
  std::vector<Point2> out;
  out.reserve(4);
  for (const Point2& p : local) {
    out.emplace_back(s.center().x() + c * p.x() - sn * p.y(), s.center().y() + sn * p.x() + c * p.y());
  }
  return out;
}

double cross(const Point2& a, const Point2& b, const Point2& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

double polygon_area(const std::vector<Point2>& poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % poly.size()];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return std::abs(twice) / 2.0;
}

// Sutherland-Hodgman: clip `subject` against each edge of the convex,
// counter-clockwise `clip` polygon.
std::vector<Point2> clip_convex(std::vector<Point2> subject, const std::vector<Point2>& clip) {
  for (std::size_t e = 0; e < clip.size() && !subject.empty(); ++e) {
    const Point2& a = clip[e];
    const Point2& b = clip[(e + 1) % clip.size()];
    std::vector<Point2> input;
    input.swap(subject);
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Point2& cur = input[i];
      const Point2& prev = input[(i + input.size() - 1) % input.size()];
      const double c_cur = cross(a, b, cur);
      const double c_prev = cross(a, b, prev);
      if (c_cur >= 0.0) {
        if (c_prev < 0.0) subject.push_back(prev + (cur - prev) * (c_prev / (c_prev - c_cur)));
        subject.push_back(cur);
      } else if (c_prev >= 0.0) {
        subject.push_back(prev + (cur - prev) * (c_prev / (c_prev - c_cur)));
      }
    }
  }
  return subject;
}

constexpr double kAlphaTolerance = 1e-12;

struct AlphaCounts {
  long tp = 0, fn = 0, fp = 0;
  double sim_sum = 0.0;
  std::map<std::pair<std::int64_t, std::int64_t>, long> pair_tp;
};

}  // namespace

void TrajectorySet::validate() const {
  for (std::size_t f = 0; f < frames.size(); ++f) {
    std::vector<std::int64_t> ids;
    ids.reserve(frames[f].size());
    for (const auto& r : frames[f]) ids.push_back(r.track_id);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
      throw Error(ErrorKind::InvalidArgument, "frame " + std::to_string(f) + " repeats a track_id");
    }
  }
}

double iou3d(const ObjectState3D& a, const ObjectState3D& b) {
  const double za0 = a.center().z() - a.h() / 2, za1 = a.center().z() + a.h() / 2;
  const double zb0 = b.center().z() - b.h() / 2, zb1 = b.center().z() + b.h() / 2;
  const double dz = std::min(za1, zb1) - std::max(za0, zb0);
  if (dz <= 0.0) return 0.0;
  const std::vector<Point2> inter = clip_convex(footprint(a), footprint(b));
  if (inter.size() < 3) return 0.0;
  const double vol = polygon_area(inter) * dz;
  const double uni = a.volume() + b.volume() - vol;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(vol / uni, 0.0, 1.0);
}

double hota_alpha(int index) noexcept { return 0.05 * (index + 1); }

HotaReport evaluate_hota(const TrajectorySet& gt, const TrajectorySet& pred, unsigned workers) {
  if (gt.num_frames() != pred.num_frames()) {
    throw Error(ErrorKind::FrameCountMismatch, "ground truth has " + std::to_string(gt.num_frames()) +
                                                   " frames, prediction has " + std::to_string(pred.num_frames()));
  }
  gt.validate();
  pred.validate();

  const std::size_t n_frames = gt.num_frames();
  std::vector<Eigen::MatrixXd> sims(n_frames);
  std::map<std::int64_t, long> gt_count, pred_count;
  for (std::size_t f = 0; f < n_frames; ++f) {
    const auto& g = gt.frames[f];
    const auto& p = pred.frames[f];
    sims[f].resize(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(p.size()));
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = 0; j < p.size(); ++j) {
        sims[f](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = iou3d(g[i].state, p[j].state);
      }
    }
    for (const auto& r : g) ++gt_count[r.track_id];
    for (const auto& r : p) ++pred_count[r.track_id];
  }

  std::array<AlphaCounts, kHotaAlphaCount> counts;
  parallel_for_chunks(kHotaAlphaCount, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t a = begin; a < end; ++a) {
      const double alpha = hota_alpha(static_cast<int>(a));
      AlphaCounts& c = counts[a];
      for (std::size_t f = 0; f < n_frames; ++f) {
        const auto& g = gt.frames[f];
        const auto& p = pred.frames[f];
        const Eigen::MatrixXd& s = sims[f];
        long tp = 0;
        if (!g.empty() && !p.empty()) {
          Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(s.rows(), s.cols());
          for (Eigen::Index i = 0; i < s.rows(); ++i) {
            for (Eigen::Index j = 0; j < s.cols(); ++j) {
              if (s(i, j) >= alpha - kAlphaTolerance) cost(i, j) = -s(i, j);
            }
          }
          const std::vector<int> match = min_cost_assignment(cost);
          for (std::size_t i = 0; i < g.size(); ++i) {
            const int j = match[i];
            if (j < 0) continue;
            const double sim = s(static_cast<Eigen::Index>(i), j);
            if (!(sim >= alpha - kAlphaTolerance)) continue;
            ++tp;
            c.sim_sum += sim;
            ++c.pair_tp[{g[i].track_id, p[static_cast<std::size_t>(j)].track_id}];
          }
        }
        c.tp += tp;
        c.fn += static_cast<long>(g.size()) - tp;
        c.fp += static_cast<long>(p.size()) - tp;
      }
    }
  });

  HotaReport report;
  double sim_total = 0.0;
  long tp_total = 0;
  for (int a = 0; a < kHotaAlphaCount; ++a) {
    const AlphaCounts& c = counts[static_cast<std::size_t>(a)];
    HotaAlphaRow& row = report.per_alpha[static_cast<std::size_t>(a)];
    row.alpha = hota_alpha(a);
    row.tp = c.tp;
    row.fn = c.fn;
    row.fp = c.fp;
    const long det_denominator = c.tp + c.fn + c.fp;
    row.det_a = det_denominator > 0 ? static_cast<double>(c.tp) / static_cast<double>(det_denominator) : 0.0;
    double ass_sum = 0.0;
    for (const auto& [ids, tpa] : c.pair_tp) {
      const long fna = gt_count[ids.first] - tpa;
      const long fpa = pred_count[ids.second] - tpa;
      ass_sum += static_cast<double>(tpa) * static_cast<double>(tpa) / static_cast<double>(tpa + fna + fpa);
    }
    row.ass_a = c.tp > 0 ? ass_sum / static_cast<double>(c.tp) : 0.0;
    row.loc_a = c.tp > 0 ? c.sim_sum / static_cast<double>(c.tp) : 0.0;
    row.hota = std::sqrt(row.det_a * row.ass_a);
    report.hota += row.hota;
    report.det_a += row.det_a;
    report.ass_a += row.ass_a;
    sim_total += c.sim_sum;
    tp_total += c.tp;
  }
  report.hota /= kHotaAlphaCount;
  report.det_a /= kHotaAlphaCount;
  report.ass_a /= kHotaAlphaCount;
  report.loc_a = tp_total > 0 ? sim_total / static_cast<double>(tp_total) : 0.0;
  return report;
}

json hota_report_to_json(const HotaReport& r) {
  json rows = json::array();
  for (const auto& row : r.per_alpha) {
    rows.push_back({{"alpha", row.alpha}, {"hota", row.hota}, {"det_a", row.det_a}, {"ass_a", row.ass_a},
                    {"loc_a", row.loc_a}, {"tp", row.tp}, {"fn", row.fn}, {"fp", row.fp}});
  }
  return json{{"schema_version", 1}, {"hota", r.hota},   {"det_a", r.det_a},
              {"ass_a", r.ass_a},    {"loc_a", r.loc_a}, {"per_alpha", rows}};
}

std::string hota_report_to_csv(const HotaReport& r) {
  std::string out = "alpha,hota,det_a,ass_a,loc_a,tp,fn,fp\n";
  char buf[256];
  for (const auto& row : r.per_alpha) {
    std::snprintf(buf, sizeof buf, "%.2f,%.9f,%.9f,%.9f,%.9f,%ld,%ld,%ld\n", row.alpha, row.hota, row.det_a,
                  row.ass_a, row.loc_a, row.tp, row.fn, row.fp);
    out += buf;
  }
  return out;
}

}  // namespace occtrack
