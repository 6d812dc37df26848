#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "occtrack/error.hpp"
#include "occtrack/oae.hpp"
#include "oracles.hpp"

using namespace occtrack;

namespace {

VisibilityScore vis(double v) {
  VisibilityScore s;
  s.value = v;
  return s;
}

ViewFeature view(VecX v) { return ViewFeature{std::move(v), true}; }

VecX axis(int dim, int i) {
  VecX v = VecX::Zero(dim);
  v[i] = 1;
  return v;
}

// Straight-loop version of the keypoint-weighted view feature.
VecX view_feature_oracle(const FeaturePyramid& pyr, const CameraModel& cam, const KeypointSet& kp,
                         const VecX& descriptor) {
  const int D = pyr.channels();
  std::vector<std::vector<double>> feats;
  for (const Vec3& p : kp.points) {
    Vec3 pc;
    for (int i = 0; i < 3; ++i) {
      pc[i] = cam.translation()[i];
      for (int j = 0; j < 3; ++j) pc[i] += cam.rotation()(i, j) * p[j];
    }
    if (pc.z() <= 1e-6) continue;
    const double u = cam.focal_x() * pc.x() / pc.z() + cam.principal_x();
    const double v = cam.focal_y() * pc.y() / pc.z() + cam.principal_y();
    std::vector<double> f(static_cast<std::size_t>(D), 0.0);
    for (std::size_t l = 0; l < pyr.num_levels(); ++l) {
      const double s = pyr.level(l).stride;
      const auto b = oracle::bilinear(pyr, l, static_cast<float>(u / s - 0.5), static_cast<float>(v / s - 0.5));
      for (int c = 0; c < D; ++c) f[c] += b[c] / static_cast<double>(pyr.num_levels());
    }
    feats.push_back(f);
  }
  std::vector<double> w(feats.size());
  double total = 0;
  for (std::size_t k = 0; k < feats.size(); ++k) {
    double dot = 0;
    for (int c = 0; c < D; ++c) dot += descriptor[c] * feats[k][c];
    w[k] = std::exp(dot / std::sqrt(static_cast<double>(D)));
    total += w[k];
  }
  VecX out = VecX::Zero(D);
  for (std::size_t k = 0; k < feats.size(); ++k)
    for (int c = 0; c < D; ++c) out[c] += w[k] / total * feats[k][c];
  return out;
}

}  // namespace

TEST_CASE("a single keypoint on a cell center returns that cell") {
  std::mt19937_64 rng(71);
  FeatureLevel l;
  l.height = l.width = 10;
  l.stride = 10;
  std::uniform_real_distribution<float> u(-1, 1);
  for (int i = 0; i < 10 * 10 * 4; ++i) l.values.push_back(u(rng));
  const FeaturePyramid pyr(0, 4, {l});
  const CameraModel cam = fixture::identity_camera();
  // cell (3, 4) has its center at pixel (35, 45)
  KeypointSet kp{{Vec3(-1.5, -0.5, 10)}, {KeypointKind::Fixed}};
  VecX desc(4);
  desc << 3, -1, 2, 0.5;
  const ViewFeature f = extract_view_feature(pyr, cam, kp, desc);
  REQUIRE(f.valid);
  for (int c = 0; c < 4; ++c) CHECK(f.value[c] == doctest::Approx(pyr.cell(0, 3, 4)[c]).epsilon(1e-6));
}

TEST_CASE("keypoints on identical features return that feature for any descriptor") {
  FeatureLevel l;
  l.height = l.width = 10;
  l.stride = 10;
  for (int i = 0; i < 100; ++i) l.values.insert(l.values.end(), {0.25f, -0.5f});
  const FeaturePyramid pyr(0, 2, {l});
  const CameraModel cam = fixture::identity_camera();
  KeypointSet kp{{Vec3(-1, 0.5, 10), Vec3(1.2, -1.1, 10)}, {KeypointKind::Fixed, KeypointKind::Learned}};
  for (double s : {-5.0, 0.0, 7.0}) {
    VecX desc(2);
    desc << s, -s;
    const ViewFeature f = extract_view_feature(pyr, cam, kp, desc);
    CHECK(f.value[0] == doctest::Approx(0.25));
    CHECK(f.value[1] == doctest::Approx(-0.5));
  }
}

TEST_CASE("view feature matches the straight-loop oracle") {
  std::mt19937_64 rng(73);
  const CameraModel cam = CameraModel::look_at(3, Vec3(-8, 2, 3), Vec3(0, 0, 0.5), 180, 256, 192);
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> off(-1, 1);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<FeatureLevel> levels;
    for (int l = 0; l < 4; ++l) {
      FeatureLevel f;
      f.stride = 8 << l;
      f.width = (256 + f.stride - 1) / static_cast<int>(f.stride);
      f.height = (192 + f.stride - 1) / static_cast<int>(f.stride);
      for (int i = 0; i < f.width * f.height * 8; ++i) f.values.push_back(static_cast<float>(n(rng) * 0.5));
      levels.push_back(std::move(f));
    }
    const FeaturePyramid pyr(3, 8, std::move(levels));
    const ObjectState3D s(Vec3(off(rng), off(rng), 0.8), 0.8, 1.2, 1.6, off(rng));
    const KeypointSet kp = generate_keypoints(s, {});
    VecX desc(8);
    for (int c = 0; c < 8; ++c) desc[c] = n(rng);
    const ViewFeature got = extract_view_feature(pyr, cam, kp, desc);
    const VecX want = view_feature_oracle(pyr, cam, kp, desc);
    CHECK((got.value - want).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("view feature is invalid when every keypoint is behind the camera") {
  std::mt19937_64 rng(2);
  const FeaturePyramid pyr = fixture::random_pyramid(rng, 0, 4, 1, 10, 10);
  const KeypointSet kp = generate_keypoints(fixture::box(0, 0, -10), {});
  const ViewFeature f = extract_view_feature(pyr, fixture::identity_camera(), kp, VecX::Zero(4));
  CHECK_FALSE(f.valid);
  CHECK_THROWS_AS(extract_view_feature(pyr, fixture::identity_camera(), kp, VecX::Zero(6)), Error);
}

TEST_CASE("fusion worked examples") {
  const std::vector<ViewFeature> axes{view(axis(4, 0)), view(axis(4, 1))};
  {
    const std::vector<VisibilityScore> v{vis(1), vis(0)};
    const FusionResult r = fuse_embedding(axes, v);
    CHECK((r.embedding.values() - axis(4, 0)).norm() < 1e-15);
  }
  {
    VecX a(3), b(3);
    a << 1, 2, 3;
    b << -2, 0.5, 1;
    const std::vector<ViewFeature> views{view(a), view(b)};
    const std::vector<VisibilityScore> v{vis(0.5), vis(0.5)};
    const FusionResult r = fuse_embedding(views, v);
    CHECK((r.embedding.values() - ((a + b) / 2).normalized()).norm() < 1e-12);
  }
  {
    const std::vector<VisibilityScore> v{vis(0.8), vis(0.2)};
    const FusionResult r = fuse_embedding(axes, v);
    CHECK(r.embedding.values()[0] == doctest::Approx(0.970).epsilon(1e-3));
    CHECK(r.embedding.values()[1] == doctest::Approx(0.243).epsilon(2e-3));
    CHECK(r.embedding.values()[2] == 0.0);
  }
}

TEST_CASE("fusion matches the direct weighted mean before normalization") {
  std::mt19937_64 rng(79);
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 300; ++trial) {
    const int views = 1 + trial % 5, dim = 3 + trial % 7;
    std::vector<ViewFeature> feats;
    std::vector<VisibilityScore> v;
    VecX num = VecX::Zero(dim);
    double den = 0;
    for (int k = 0; k < views; ++k) {
      VecX g(dim);
      for (int c = 0; c < dim; ++c) g[c] = n(rng);
      const double w = u(rng);
      feats.push_back(view(g));
      v.push_back(vis(w));
      num += w * g;
      den += w;
    }
    const FusionResult r = fuse_embedding(feats, v);
    if (den <= kDefaultVisibilityFloor) {
      CHECK(r.all_occluded);
      continue;
    }
    CHECK((r.fused - num / den).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(r.embedding.values().norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("fully occluded and invalid views") {
  const std::vector<ViewFeature> axes{view(axis(3, 0)), view(axis(3, 1))};
  const std::vector<VisibilityScore> none{vis(0), vis(0)};
  const FusionResult r = fuse_embedding(axes, none);
  CHECK(r.all_occluded);
  CHECK(r.embedding.empty());

  // an invalid view contributes nothing even with full visibility
  std::vector<ViewFeature> mixed{view(axis(3, 0)), ViewFeature{axis(3, 1), false}};
  const std::vector<VisibilityScore> both{vis(0.3), vis(1.0)};
  const FusionResult m = fuse_embedding(mixed, both);
  CHECK((m.embedding.values() - axis(3, 0)).norm() < 1e-15);

  const std::vector<VisibilityScore> one{vis(1)};
  CHECK_THROWS_AS(fuse_embedding(axes, one), Error);
  const std::vector<VisibilityScore> bad{vis(1.5), vis(0)};
  CHECK_THROWS_AS(fuse_embedding(axes, bad), Error);
  CHECK_THROWS_AS(Embedding::normalized(VecX::Zero(3)), Error);
}
