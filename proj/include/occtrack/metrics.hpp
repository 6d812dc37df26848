#pragma once

#include <array>

#include "occtrack/json_io.hpp"
#include "occtrack/trajectory.hpp"

namespace occtrack {

/// 3D IoU of yaw-rotated boxes: footprint polygons clipped with
/// Sutherland-Hodgman, times the vertical overlap, over the union volume.
double iou3d(const ObjectState3D& a, const ObjectState3D& b);

inline constexpr int kHotaAlphaCount = 19;

/// alpha_i = 0.05 * (i + 1), i = 0..18.
double hota_alpha(int index) noexcept;

struct HotaAlphaRow {
  double alpha = 0.0;
  double hota = 0.0;
  double det_a = 0.0;
  double ass_a = 0.0;
  double loc_a = 0.0;
  long tp = 0, fn = 0, fp = 0;
};

struct HotaReport {
  double hota = 0.0;
  double det_a = 0.0;
  double ass_a = 0.0;
  double loc_a = 0.0;
  std::array<HotaAlphaRow, kHotaAlphaCount> per_alpha{};
};

/// Per alpha: each frame is matched by maximum total IoU over pairs with
/// IoU >= alpha; DetA = TP / (TP + FN + FP), AssA = mean over TPs of
/// TPA / (TPA + FNA + FPA). HOTA_alpha = sqrt(DetA * AssA); final scores are
/// means over alpha, except LocA which pools IoU over all TPs of all alphas.
/// Zero denominators yield 0.
HotaReport evaluate_hota(const TrajectorySet& gt, const TrajectorySet& pred, unsigned workers = 1);

json hota_report_to_json(const HotaReport& report);
std::string hota_report_to_csv(const HotaReport& report);

}  // namespace occtrack
