#include "occtrack/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "occtrack/error.hpp"

namespace occtrack {

void LossWeights::validate() const {
  for (double w : {box, depth, vis, id}) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(ErrorKind::InvalidArgument, "loss weights must be finite and non-negative");
    }
  }
}

double huber(double r, double delta) noexcept {
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

double huber_grad(double r, double delta) noexcept {
  if (std::abs(r) <= delta) return r;
  return r > 0.0 ? delta : -delta;
}

LossTerm box_loss(std::span<const double, 10> pred, std::span<const double, 10> gt) {
  LossTerm out;
  out.gradient.assign(10, 0.0);
  for (int i : {0, 1, 2, 3, 4, 5, 7, 8, 9}) {
    const double r = pred[i] - gt[i];
    out.value += huber(r);
    out.gradient[i] = huber_grad(r);
  }
  const double rs = std::sin(pred[6]) - std::sin(gt[6]);
  const double rc = std::cos(pred[6]) - std::cos(gt[6]);
  out.value += huber(rs) + huber(rc);
  out.gradient[6] = huber_grad(rs) * std::cos(pred[6]) - huber_grad(rc) * std::sin(pred[6]);
  return out;
}

LossTerm box_loss(const ObjectState3D& pred, const ObjectState3D& gt) {
  const auto p = pred.to_array();
  const auto g = gt.to_array();
  return box_loss(std::span<const double, 10>(p), std::span<const double, 10>(g));
}

LossTerm visibility_loss(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) throw Error(ErrorKind::LengthMismatch, "visibility lists differ in length");
  if (pred.empty()) throw Error(ErrorKind::InvalidArgument, "visibility loss needs at least one entry");
  LossTerm out;
  out.gradient.assign(pred.size(), 0.0);
  const auto n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!(gt[i] >= 0.0 && gt[i] <= 1.0)) throw Error(ErrorKind::InvalidArgument, "visibility target outside [0, 1]");
    const double p = std::clamp(pred[i], kBceEpsilon, 1.0 - kBceEpsilon);
    out.value -= (gt[i] * std::log(p) + (1.0 - gt[i]) * std::log1p(-p)) / n;
    if (p == pred[i]) out.gradient[i] = (-gt[i] / p + (1.0 - gt[i]) / (1.0 - p)) / n;
  }
  return out;
}

LossTerm id_loss(std::span<const double> logits, std::size_t gt_index) {
  if (logits.size() < 2) throw Error(ErrorKind::InvalidArgument, "identity loss needs at least two classes");
  if (gt_index >= logits.size()) {
    throw Error(ErrorKind::IndexOutOfRange, "identity index " + std::to_string(gt_index) + " out of range");
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  LossTerm out;
  out.value = m + std::log(z) - logits[gt_index];
  out.gradient.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out.gradient[k] = std::exp(logits[k] - m) / z;
  out.gradient[gt_index] -= 1.0;
  return out;
}

LossTerm depth_loss(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) throw Error(ErrorKind::LengthMismatch, "depth lists differ in length");
  if (pred.empty()) throw Error(ErrorKind::InvalidArgument, "depth loss needs at least one entry");
  LossTerm out;
  out.gradient.resize(pred.size());
  const auto n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!(gt[i] > 0.0)) throw Error(ErrorKind::NonPositiveGT, "depth targets must be positive");
    const double r = pred[i] - gt[i];
    out.value += huber(r) / n;
    out.gradient[i] = huber_grad(r) / n;
  }
  return out;
}

LossReport total_loss(const LossComponents& c, const LossWeights& w) {
  w.validate();
  for (double v : {c.box.value, c.depth.value, c.vis.value, c.id.value}) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "loss components must be finite");
  }
  LossReport r;
  r.box = c.box.value;
  r.depth = c.depth.value;
  r.vis = c.vis.value;
  r.id = c.id.value;
  r.total = w.box * r.box + w.depth * r.depth + w.vis * r.vis + w.id * r.id;
  auto scaled = [](const std::vector<double>& g, double s) {
    std::vector<double> out(g.size());
    std::transform(g.begin(), g.end(), out.begin(), [s](double v) { return s * v; });
    return out;
  };
  r.grad_box = scaled(c.box.gradient, w.box);
  r.grad_depth = scaled(c.depth.gradient, w.depth);
  r.grad_vis = scaled(c.vis.gradient, w.vis);
  r.grad_id = scaled(c.id.gradient, w.id);
  return r;
}

double gradient_check_error(const std::function<double(std::span<const double>)>& f,
                            std::span<const double> x, std::span<const double> analytic, double h) {
  std::vector<double> probe(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = f(probe);
    probe[i] = orig - h;
    const double down = f(probe);
    probe[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-3});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
  }
  return worst;
}

namespace {

bool near_kink(double r) { return std::abs(std::abs(r) - kHuberDelta) <= 1e-3; }

}  // namespace

std::vector<GradientCheckSummary> run_gradient_checks(int instances, std::uint64_t seed, double tolerance) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  GradientCheckSummary box{"box", 0, 0, 0.0, false};
  GradientCheckSummary depth{"depth", 0, 0, 0.0, false};
  GradientCheckSummary vis{"vis", 0, 0, 0.0, false};
  GradientCheckSummary id{"id", 0, 0, 0.0, false};

  while (box.instances < instances) {
    std::array<double, 10> p{}, g{};
    for (int i = 0; i < 10; ++i) {
      p[i] = coord(rng);
      g[i] = coord(rng);
    }
    bool kink = false;
    for (int i : {0, 1, 2, 3, 4, 5, 7, 8, 9}) kink = kink || near_kink(p[i] - g[i]);
    kink = kink || near_kink(std::sin(p[6]) - std::sin(g[6])) || near_kink(std::cos(p[6]) - std::cos(g[6]));
    if (kink) {
      ++box.skipped_near_kink;
      continue;
    }
    const std::span<const double, 10> gs(g);
    const LossTerm t = box_loss(std::span<const double, 10>(p), gs);
    const double err = gradient_check_error(
        [&](std::span<const double> x) { return box_loss(std::span<const double, 10>(x.data(), 10), gs).value; },
        p, t.gradient);
    box.worst_relative_error = std::max(box.worst_relative_error, err);
    ++box.instances;
  }

  while (depth.instances < instances) {
    const std::size_t n = 1 + rng() % 16;
    std::vector<double> p(n), g(n);
    bool kink = false;
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = 0.5 + 20.0 * unit(rng);
      p[i] = g[i] + coord(rng);
      kink = kink || near_kink(p[i] - g[i]);
    }
    if (kink) {
      ++depth.skipped_near_kink;
      continue;
    }
    const LossTerm t = depth_loss(p, g);
    const double err = gradient_check_error([&](std::span<const double> x) { return depth_loss(x, g).value; }, p,
                                            t.gradient);
    depth.worst_relative_error = std::max(depth.worst_relative_error, err);
    ++depth.instances;
  }

  while (vis.instances < instances) {
    const std::size_t n = 16;
    std::vector<double> p(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = 0.02 + 0.96 * unit(rng);
      g[i] = (rng() % 3 == 0) ? unit(rng) : static_cast<double>(rng() % 2);
    }
    const LossTerm t = visibility_loss(p, g);
    const double err = gradient_check_error([&](std::span<const double> x) { return visibility_loss(x, g).value; },
                                            p, t.gradient);
    vis.worst_relative_error = std::max(vis.worst_relative_error, err);
    ++vis.instances;
  }

  while (id.instances < instances) {
    const std::size_t k = 10;
    std::vector<double> logits(k);
    for (double& l : logits) l = coord(rng);
    const std::size_t gt = rng() % k;
    const LossTerm t = id_loss(logits, gt);
    const double err = gradient_check_error([&](std::span<const double> x) { return id_loss(x, gt).value; },
                                            logits, t.gradient);
    id.worst_relative_error = std::max(id.worst_relative_error, err);
    ++id.instances;
  }

  std::vector<GradientCheckSummary> out{box, depth, vis, id};
  for (auto& s : out) s.passed = s.worst_relative_error <= tolerance;
  return out;
}

json gradient_checks_to_json(std::span<const GradientCheckSummary> checks, double tolerance) {
  json arr = json::array();
  bool all = true;
  for (const auto& c : checks) {
    arr.push_back({{"loss", c.loss},
                   {"instances", c.instances},
                   {"skipped_near_kink", c.skipped_near_kink},
                   {"worst_relative_error", c.worst_relative_error},
                   {"passed", c.passed}});
    all = all && c.passed;
  }
  return json{{"schema_version", 1}, {"tolerance", tolerance}, {"checks", arr}, {"passed", all}};
}

}  // namespace occtrack
