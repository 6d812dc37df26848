#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "occtrack/error.hpp"
#include "occtrack/simulator.hpp"

using namespace occtrack;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Io;
}

// Walker crossing the view of basic_scene's camera from y = -4 to y = 4.
SceneConfig crossing_scene() {
  SceneConfig cfg = fixture::basic_scene();
  cfg.duration = 4.0;
  cfg.background_sigma = 0.0;
  cfg.objects.push_back(fixture::walker(5, {{0.0, Vec3(0, -4, 0.85)}, {4.0, Vec3(0, 4, 0.85)}}));
  return cfg;
}

bool has_signature_cell(const FeaturePyramid& pyr, const VecX& sig) {
  for (std::size_t l = 0; l < pyr.num_levels(); ++l) {
    const auto& lv = pyr.level(l);
    for (int y = 0; y < lv.height; ++y)
      for (int x = 0; x < lv.width; ++x)
        if (pyr.cell(l, x, y)[0] == static_cast<float>(sig[0])) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("simulation is deterministic and independent of worker count") {
  SceneConfig cfg = crossing_scene();
  cfg.background_sigma = 0.05;
  cfg.objects.push_back(fixture::walker(6, {{0.5, Vec3(1, 2, 0.85)}, {3.0, Vec3(-1, -2, 0.85)}}));
  const Simulation a = simulate(cfg, true, 1);
  const Simulation b = simulate(cfg, true, 3);
  REQUIRE(a.frames.size() == cfg.num_frames());
  for (std::size_t f = 0; f < a.frames.size(); ++f) {
    REQUIRE(a.frames[f].objects.size() == b.frames[f].objects.size());
    for (std::size_t k = 0; k < a.frames[f].objects.size(); ++k) {
      CHECK(a.frames[f].objects[k].state.to_array() == b.frames[f].objects[k].state.to_array());
      CHECK(a.frames[f].visibility[0][k].value == b.frames[f].visibility[0][k].value);
    }
    CHECK(a.pyramids[f][0].level(0).values == b.pyramids[f][0].level(0).values);
    CHECK(a.pyramids[f][0].level(1).values == b.pyramids[f][0].level(1).values);
  }
  const auto da = detections_from_truth(cfg, a.frames[7]);
  const auto db = detections_from_truth(cfg, b.frames[7]);
  REQUIRE(da.size() == db.size());
  for (std::size_t k = 0; k < da.size(); ++k) CHECK(da[k].embedding.values() == db[k].embedding.values());
}

TEST_CASE("object lifetimes follow the waypoint span") {
  const ObjectSpec o = fixture::walker(1, {{1.0, Vec3(0, 0, 0)}, {2.0, Vec3(2, 0, 0)}, {4.0, Vec3(2, 4, 0)}});
  CHECK_FALSE(object_state_at(o, 0.5).has_value());
  CHECK_FALSE(object_state_at(o, 4.5).has_value());
  CHECK(object_state_at(o, 1.5)->center().x() == doctest::Approx(1.0));
  CHECK(object_state_at(o, 1.5)->velocity().x() == doctest::Approx(2.0));
  CHECK(object_state_at(o, 3.0)->velocity().y() == doctest::Approx(2.0));
  CHECK(object_state_at(o, 4.0)->center().y() == doctest::Approx(4.0));
  const ObjectSpec still = fixture::walker(2, {{3.0, Vec3(1, 1, 0)}});
  CHECK(object_state_at(still, 0.0)->center() == Vec3(1, 1, 0));
  CHECK(object_state_at(still, 99.0)->velocity() == Vec3::Zero());
}

TEST_CASE("truth velocity matches finite differences of the truth positions") {
  SceneConfig cfg = crossing_scene();
  const Simulation sim = simulate(cfg);
  for (std::size_t f = 0; f + 1 < sim.frames.size(); ++f) {
    const auto& a = sim.frames[f].objects.at(0).state;
    const auto& b = sim.frames[f + 1].objects.at(0).state;
    const Vec3 fd = (b.center() - a.center()) * cfg.frame_rate;
    CHECK((fd - a.velocity()).norm() < 1e-9);
  }
}

TEST_CASE("stored visibility equals a fresh recomputation") {
  SceneConfig cfg = crossing_scene();
  cfg.occluders.push_back(ObjectState3D(Vec3(-5, 0, 1), 2, 0.2, 2, 0));
  cfg.objects.push_back(fixture::walker(6, {{0.0, Vec3(2, 3, 0.85)}, {4.0, Vec3(2, -3, 0.85)}}));
  const Simulation sim = simulate(cfg);
  for (const FrameTruth& t : sim.frames) {
    for (std::size_t k = 0; k < t.objects.size(); ++k) {
      std::vector<ObjectState3D> blockers = cfg.occluders;
      for (std::size_t j = 0; j < t.objects.size(); ++j)
        if (j != k) blockers.push_back(t.objects[j].state);
      const VisibilityScore want =
          visible_fraction(cfg.cameras[0], t.objects[k].state, blockers, cfg.visibility_grid);
      CHECK(t.visibility[0][k].value == want.value);
      CHECK(t.visibility[0][k].object_id == t.objects[k].identity);
    }
  }
}

TEST_CASE("an object behind an occluder is invisible and unpainted") {
  SceneConfig cfg = crossing_scene();
  // a 2 m wide wall halfway to the camera hides the walker near y = 0
  cfg.occluders.push_back(ObjectState3D(Vec3(-5, 0, 1.25), 2.0, 0.2, 2.5, 0));
  const Simulation sim = simulate(cfg, true);
  const VecX sig = identity_signature(cfg, 5);
  int hidden = 0, open = 0;
  for (std::size_t f = 0; f < sim.frames.size(); ++f) {
    const double y = sim.frames[f].objects[0].state.center().y();
    const double v = sim.frames[f].visibility[0][0].value;
    if (std::abs(y) < 0.4) {
      CHECK(v == 0.0);
      CHECK_FALSE(has_signature_cell(sim.pyramids[f][0], sig));
      ++hidden;
    } else if (std::abs(y) > 2.5 && std::abs(y) < 3.5) {
      CHECK(v > 0.9);
      CHECK(has_signature_cell(sim.pyramids[f][0], sig));
      ++open;
    }
  }
  CHECK(hidden >= 3);
  CHECK(open >= 3);
}

TEST_CASE("the nearer object wins contested cells") {
  SceneConfig cfg = fixture::basic_scene();
  cfg.duration = 0.1;
  cfg.background_sigma = 0.0;
  cfg.objects.push_back(fixture::walker(1, {{0.0, Vec3(-3, 0.1, 0.85)}}));
  cfg.objects.push_back(fixture::walker(2, {{0.0, Vec3(0, -0.2, 0.85)}}, 2.0, 2.0, 1.7));
  const FrameTruth t = frame_truth(cfg, 0);
  const auto pyrs = render_pyramids(cfg, t);
  const CameraModel& cam = cfg.cameras[0];
  std::vector<ProjectedRect> rects;
  std::vector<VecX> sigs;
  for (const auto& o : t.objects) {
    rects.push_back(projected_rect(cam, o.state));
    sigs.push_back(identity_signature(cfg, o.identity));
  }
  int contested = 0;
  for (std::size_t l = 0; l < pyrs[0].num_levels(); ++l) {
    const auto& lv = pyrs[0].level(l);
    for (int y = 0; y < lv.height; ++y) {
      for (int x = 0; x < lv.width; ++x) {
        const double px = (x + 0.5) * lv.stride, py = (y + 0.5) * lv.stride;
        int best = -1;
        for (int k = 0; k < 2; ++k) {
          if (rects[k].rect.contains(px, py) && (best < 0 || rects[k].mean_depth < rects[best].mean_depth)) best = k;
        }
        contested += rects[0].rect.contains(px, py) && rects[1].rect.contains(px, py);
        const float* cell = pyrs[0].cell(l, x, y);
        for (int c = 0; c < cfg.embedding_dim; ++c) {
          const float want = best < 0 ? 0.0f : static_cast<float>(sigs[best][c]);
          REQUIRE(cell[c] == want);
        }
      }
    }
  }
  CHECK(contested >= 8);
}

TEST_CASE("noise-free detections reproduce the truth") {
  SceneConfig cfg = crossing_scene();
  cfg.objects.push_back(fixture::walker(9, {{0.0, Vec3(3, 0, 0.85)}}));
  const Simulation sim = simulate(cfg);
  for (const FrameTruth& t : sim.frames) {
    const auto dets = detections_from_truth(cfg, t);
    REQUIRE(dets.size() == t.objects.size());
    for (std::size_t k = 0; k < dets.size(); ++k) {
      CHECK(dets[k].state.to_array() == t.objects[k].state.to_array());
      CHECK((dets[k].embedding.values() - identity_signature(cfg, t.objects[k].identity)).norm() < 1e-15);
      CHECK(dets[k].confidence == t.visibility[0][k].value);
    }
  }
  cfg.noise.p_dropout = 1.0;
  CHECK(detections_from_truth(cfg, sim.frames[3]).empty());
}

TEST_CASE("occlusion-aware embeddings recover the signature on a clean scene") {
  SceneConfig cfg = crossing_scene();
  const FrameTruth t = frame_truth(cfg, 20);
  REQUIRE(t.visibility[0][0].value == 1.0);
  const auto pyrs = render_pyramids(cfg, t);
  auto dets = detections_from_truth(cfg, t);
  apply_oae_embeddings(cfg, pyrs, {}, dets);
  REQUIRE(dets[0].embedding_valid);
  CHECK(dets[0].embedding.values().dot(identity_signature(cfg, 5)) > 1 - 1e-6);
}

TEST_CASE("embedding noise keeps identities apart") {
  SceneConfig cfg;
  cfg.seed = 7;
  cfg.duration = 20.0;
  cfg.noise.sigma_embedding = 0.1;
  for (int i = 0; i < 16; ++i) cfg.objects.push_back(fixture::walker(i, {{0.0, Vec3(i, 0, 0)}}));
  REQUIRE(cfg.num_frames() == 200);
  std::vector<std::vector<VecX>> per_id(16);
  for (std::size_t f = 0; f < cfg.num_frames(); f += 10) {
    const auto dets = detections_from_truth(cfg, frame_truth(cfg, f));
    for (std::size_t k = 0; k < dets.size(); ++k) per_id[k].push_back(dets[k].embedding.values());
  }
  double intra = 0, inter = 0;
  long ni = 0, nx = 0;
  for (int a = 0; a < 16; ++a) {
    for (int b = a; b < 16; ++b) {
      for (std::size_t i = 0; i < per_id[a].size(); ++i) {
        for (std::size_t j = (a == b ? i + 1 : 0); j < per_id[b].size(); ++j) {
          const double d = (per_id[a][i] - per_id[b][j]).norm();
          (a == b ? intra : inter) += d;
          ++(a == b ? ni : nx);
        }
      }
    }
  }
  intra /= ni;
  inter /= nx;
  CHECK(intra < inter);
  CHECK(intra == doctest::Approx(0.1 * std::sqrt(2.0)).epsilon(0.2));
}

TEST_CASE("scene validation") {
  SceneConfig cfg = fixture::basic_scene();
  cfg.objects.push_back(fixture::walker(1, {}));
  CHECK(kind_of([&] { cfg.validate(); }) == ErrorKind::InvalidWaypoints);
  cfg.objects[0] = fixture::walker(1, {{1.0, Vec3::Zero()}, {1.0, Vec3::Ones()}});
  CHECK(kind_of([&] { cfg.validate(); }) == ErrorKind::InvalidWaypoints);
  CHECK(kind_of([&] { scene_config_from_json(scene_config_to_json(cfg), "scene"); }) == ErrorKind::InvalidWaypoints);
  cfg.objects[0] = fixture::walker(1, {{0.0, Vec3::Zero()}});
  cfg.validate();
  cfg.embedding_dim = 7;
  CHECK(kind_of([&] { cfg.validate(); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("scene documents round trip and reject unknown fields") {
  SceneConfig cfg = crossing_scene();
  cfg.occluders.push_back(ObjectState3D(Vec3(-5, 0, 1.25), 2.0, 0.2, 2.5, 0.25));
  cfg.noise.sigma_center = 0.05;
  const json doc = scene_config_to_json(cfg);
  const SceneConfig back = scene_config_from_json(doc, "scene");
  CHECK(scene_config_to_json(back) == doc);
  CHECK(back.cameras[0].rotation() == cfg.cameras[0].rotation());
  json extra = doc;
  extra["noise"]["sigma_wobble"] = 1;
  CHECK(kind_of([&] { scene_config_from_json(extra, "scene"); }) == ErrorKind::ConfigParseError);
  json missing = doc;
  missing.erase("frame_rate");
  CHECK(kind_of([&] { scene_config_from_json(missing, "scene"); }) == ErrorKind::ConfigParseError);
}

TEST_CASE("truth trajectories are keyed by identity") {
  SceneConfig cfg = crossing_scene();
  cfg.objects.push_back(fixture::walker(12, {{1.0, Vec3(1, 1, 0.85)}, {2.0, Vec3(2, 1, 0.85)}}));
  const Simulation sim = simulate(cfg);
  const TrajectorySet t = truth_trajectories(sim.frames);
  REQUIRE(t.num_frames() == sim.frames.size());
  CHECK(t.frames[0].size() == 1);
  CHECK(t.frames[15].size() == 2);
  CHECK(t.frames[15][1].track_id == 12);
}
