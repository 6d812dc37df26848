#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "occtrack/geometry.hpp"
#include "occtrack/json_io.hpp"

namespace occtrack {

inline constexpr double kHuberDelta = 1.0;
inline constexpr double kBceEpsilon = 1e-7;

struct LossWeights {
  double box = 0.25;
  double depth = 0.2;
  double vis = 1.0;
  double id = 1.0;

  void validate() const;
};

/// A scalar loss and its gradient with respect to the prediction inputs.
struct LossTerm {
  double value = 0.0;
  std::vector<double> gradient;
};

double huber(double r, double delta = kHuberDelta) noexcept;
double huber_grad(double r, double delta = kHuberDelta) noexcept;

/// Smooth-L1 over (x, y, z, w, l, h, vx, vy, vz) plus smooth-L1 on the sin and
/// cos yaw residuals. Gradient follows ObjectState3D::to_array() order.
LossTerm box_loss(const ObjectState3D& pred, const ObjectState3D& gt);
/// Same loss on raw parameter arrays (yaw is not wrapped), for gradient checks.
LossTerm box_loss(std::span<const double, 10> pred, std::span<const double, 10> gt);

/// Mean binary cross-entropy with predictions clamped to [eps, 1 - eps];
/// clamped entries get zero gradient.
LossTerm visibility_loss(std::span<const double> pred, std::span<const double> gt);

/// Softmax cross-entropy; gradient = softmax(logits) - onehot(gt).
LossTerm id_loss(std::span<const double> logits, std::size_t gt_index);

/// Mean smooth-L1 over depth residuals.
LossTerm depth_loss(std::span<const double> pred, std::span<const double> gt);

struct LossComponents {
  LossTerm box, depth, vis, id;
};

struct LossReport {
  double box = 0.0, depth = 0.0, vis = 0.0, id = 0.0, total = 0.0;
  // Per-component gradients already multiplied by their weights.
  std::vector<double> grad_box, grad_depth, grad_vis, grad_id;
};

LossReport total_loss(const LossComponents& components, const LossWeights& weights);

/// Worst relative error between an analytic gradient and central differences
/// with step h; relative to max(|analytic|, |numeric|, 1e-3).
double gradient_check_error(const std::function<double(std::span<const double>)>& f,
                            std::span<const double> x, std::span<const double> analytic,
                            double h = 1e-5);

struct GradientCheckSummary {
  std::string loss;
  int instances = 0;
  int skipped_near_kink = 0;
  double worst_relative_error = 0.0;
  bool passed = false;
};

/// Randomized gradient-check suite over every loss; the basis of `losses-check`.
std::vector<GradientCheckSummary> run_gradient_checks(int instances, std::uint64_t seed,
                                                      double tolerance = 1e-4);

json gradient_checks_to_json(std::span<const GradientCheckSummary> checks, double tolerance);

}  // namespace occtrack
