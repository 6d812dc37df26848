#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "occtrack/error.hpp"
#include "occtrack/metrics.hpp"
#include "oracles.hpp"

using namespace occtrack;

TEST_CASE("iou worked examples") {
  const ObjectState3D a = fixture::box(0, 0, 0);
  CHECK(iou3d(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(iou3d(a, fixture::box(3, 0, 0)) == 0.0);
  CHECK(iou3d(a, fixture::box(0, 0, 1.5)) == 0.0);
  CHECK(iou3d(a, fixture::box(0.5, 0, 0)) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // touching faces share no volume
  CHECK(iou3d(a, fixture::box(1.0, 0, 0)) == doctest::Approx(0.0));
}

TEST_CASE("rotated iou matches a Monte Carlo volume estimate") {
  const ObjectState3D a = fixture::box(0, 0, 0);
  const ObjectState3D b = fixture::box(0, 0, 0, 1, 1, 1, M_PI / 4);
  CHECK(std::abs(iou3d(a, b) - oracle::monte_carlo_iou(a, b, 1000000, 5)) <= 1e-3);

  std::mt19937_64 rng(131);
  std::uniform_real_distribution<double> off(-0.8, 0.8), dim(0.5, 2), yaw(-M_PI, M_PI);
  for (int i = 0; i < 20; ++i) {
    const ObjectState3D p(Vec3(0, 0, 0), dim(rng), dim(rng), dim(rng), yaw(rng));
    const ObjectState3D q(Vec3(off(rng), off(rng), off(rng)), dim(rng), dim(rng), dim(rng), yaw(rng));
    CHECK(std::abs(iou3d(p, q) - oracle::monte_carlo_iou(p, q, 400000, 100 + i)) <= 5e-3);
  }
}

TEST_CASE("iou is symmetric and invariant to rigid motion") {
  std::mt19937_64 rng(137);
  std::uniform_real_distribution<double> off(-1, 1), dim(0.3, 2), yaw(-M_PI, M_PI);
  for (int i = 0; i < 500; ++i) {
    const ObjectState3D p(Vec3(off(rng), off(rng), off(rng)), dim(rng), dim(rng), dim(rng), yaw(rng));
    const ObjectState3D q(Vec3(off(rng), off(rng), off(rng)), dim(rng), dim(rng), dim(rng), yaw(rng));
    const double v = iou3d(p, q);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0 + 1e-12);
    CHECK(std::abs(v - iou3d(q, p)) < 1e-12);
    // shift both and spin both about the origin by the same angle
    const Vec3 t(off(rng) * 5, off(rng) * 5, off(rng) * 5);
    const double r = yaw(rng);
    auto move = [&](const ObjectState3D& s) {
      const Vec3 c = s.center();
      const Vec3 rc(std::cos(r) * c.x() - std::sin(r) * c.y(), std::sin(r) * c.x() + std::cos(r) * c.y(), c.z());
      return ObjectState3D(rc + t, s.w(), s.l(), s.h(), s.yaw() + r);
    };
    CHECK(std::abs(v - iou3d(move(p), move(q))) < 1e-9);
  }
}

TEST_CASE("perfect tracking scores one") {
  TrajectorySet gt;
  gt.frames.resize(10);
  for (std::size_t f = 0; f < 10; ++f) {
    gt.frames[f].push_back({1, fixture::box(0.1 * f, 0, 0), 1});
    gt.frames[f].push_back({2, fixture::box(5, 0.2 * f, 0), 1});
  }
  const HotaReport r = evaluate_hota(gt, gt);
  CHECK(r.hota == doctest::Approx(1.0));
  CHECK(r.det_a == doctest::Approx(1.0));
  CHECK(r.ass_a == doctest::Approx(1.0));
  CHECK(r.loc_a == doctest::Approx(1.0));
}

TEST_CASE("an identity switch halfway halves association") {
  const std::size_t T = 8;
  TrajectorySet gt, pred;
  gt.frames.resize(2 * T);
  pred.frames.resize(2 * T);
  for (std::size_t f = 0; f < 2 * T; ++f) {
    const ObjectState3D s = fixture::box(0.1 * f, 0, 0);
    gt.frames[f].push_back({1, s, 1});
    pred.frames[f].push_back({f < T ? 10 : 11, s, 1});
  }
  const HotaReport r = evaluate_hota(gt, pred);
  CHECK(r.det_a == doctest::Approx(1.0));
  CHECK(r.ass_a == doctest::Approx(0.5));
  CHECK(r.hota == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("empty predictions and frame count mismatch") {
  TrajectorySet gt = fixture::single_track(5, 1, fixture::box(0, 0, 0));
  TrajectorySet none;
  none.frames.resize(5);
  const HotaReport r = evaluate_hota(gt, none);
  CHECK(r.det_a == 0.0);
  CHECK(r.hota == 0.0);
  CHECK(evaluate_hota(none, none).hota == 0.0);
  none.frames.resize(4);
  try {
    evaluate_hota(gt, none);
    FAIL("expected FrameCountMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FrameCountMismatch);
  }
  TrajectorySet dup = gt;
  dup.frames[2].push_back(dup.frames[2][0]);
  CHECK_THROWS_AS(evaluate_hota(dup, gt), Error);
}

TEST_CASE("hota equals exhaustive matching on random scenarios") {
  std::mt19937_64 rng(139);
  std::uniform_real_distribution<double> jitter(-0.35, 0.35), u(0, 1);
  for (int trial = 0; trial < 40; ++trial) {
    TrajectorySet gt, pred;
    gt.frames.resize(20);
    pred.frames.resize(20);
    for (std::size_t f = 0; f < 20; ++f) {
      for (int k = 0; k < 3; ++k) {
        if (u(rng) < 0.15) continue;
        // tracks sit close enough together that matchings compete
        const ObjectState3D s = fixture::box(0.6 * k + 0.05 * f, 0, 0);
        gt.frames[f].push_back({k + 1, s, 1});
        if (u(rng) < 0.85) {
          const std::int64_t id = u(rng) < 0.2 ? 100 + static_cast<int>(u(rng) * 4) : 10 + k;
          bool dup = false;
          for (const auto& r : pred.frames[f]) dup |= r.track_id == id;
          if (!dup) pred.frames[f].push_back({id, fixture::box(s.center().x() + jitter(rng), jitter(rng) * 0.5, 0), 1});
        }
      }
      if (u(rng) < 0.2) pred.frames[f].push_back({200 + static_cast<int>(f), fixture::box(jitter(rng), 0, 0), 1});
    }
    const HotaReport r = evaluate_hota(gt, pred, 1 + trial % 3);
    const oracle::HotaOracle want = oracle::brute_force_hota(gt, pred, iou3d);
    for (int a = 0; a < kHotaAlphaCount; ++a) {
      CHECK(r.per_alpha[a].det_a == doctest::Approx(want.det_a[a]).epsilon(1e-12));
      CHECK(r.per_alpha[a].ass_a == doctest::Approx(want.ass_a[a]).epsilon(1e-12));
    }
    CHECK(r.hota == doctest::Approx(want.hota_mean).epsilon(1e-12));
    CHECK(r.loc_a == doctest::Approx(want.loc_a).epsilon(1e-12));
  }
}

TEST_CASE("report serializations") {
  const TrajectorySet gt = fixture::single_track(3, 1, fixture::box(0, 0, 0));
  const HotaReport r = evaluate_hota(gt, gt);
  const json j = hota_report_to_json(r);
  CHECK(j.at("hota") == doctest::Approx(1.0));
  CHECK(j.at("per_alpha").size() == kHotaAlphaCount);
  const std::string csv = hota_report_to_csv(r);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == kHotaAlphaCount + 1);
  CHECK(hota_alpha(0) == doctest::Approx(0.05));
  CHECK(hota_alpha(18) == doctest::Approx(0.95));
}
