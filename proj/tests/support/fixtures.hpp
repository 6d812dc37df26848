#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "occtrack/feature.hpp"
#include "occtrack/geometry.hpp"
#include "occtrack/metrics.hpp"
#include "occtrack/reid.hpp"
#include "occtrack/simulator.hpp"

namespace fixture {

using namespace occtrack;

inline CameraModel identity_camera(int id = 0, double f = 100.0, double c = 50.0, int w = 100, int h = 100) {
  return CameraModel(id, f, f, c, c, Mat3::Identity(), Vec3::Zero(), w, h);
}

/// Random pyramid with features uniform in [-1, 1].
inline FeaturePyramid random_pyramid(std::mt19937_64& rng, int camera_id, int channels, int levels, int base_h,
                                     int base_w) {
  std::uniform_real_distribution<float> val(-1.0f, 1.0f);
  std::vector<FeatureLevel> lv;
  for (int l = 0; l < levels; ++l) {
    FeatureLevel f;
    f.height = std::max(1, base_h >> l);
    f.width = std::max(1, base_w >> l);
    f.stride = 8.0 * (1 << l);
    f.values.resize(static_cast<std::size_t>(f.height) * f.width * channels);
    for (float& v : f.values) v = val(rng);
    lv.push_back(std::move(f));
  }
  return FeaturePyramid(camera_id, channels, std::move(lv));
}

/// Random plan whose sample points land inside, near and outside the grids.
inline SamplePlan random_plan(std::mt19937_64& rng, const std::vector<FeaturePyramid>& pyrs, int queries,
                              int points) {
  SamplePlan plan;
  std::uniform_real_distribution<float> w(0.0f, 1.0f);
  std::uniform_real_distribution<float> unit(-0.15f, 1.15f);
  for (int q = 0; q < queries; ++q) {
    std::vector<SampleTuple> tuples;
    for (const auto& p : pyrs) {
      for (std::size_t l = 0; l < p.num_levels(); ++l) {
        for (int k = 0; k < points; ++k) {
          const auto& lv = p.level(l);
          tuples.push_back({p.camera_id(), static_cast<int>(l), unit(rng) * lv.width, unit(rng) * lv.height, w(rng)});
        }
      }
    }
    plan.queries.push_back(std::move(tuples));
  }
  return plan;
}

inline ObjectState3D box(double x, double y, double z, double w = 1, double l = 1, double h = 1, double yaw = 0) {
  return ObjectState3D(Vec3(x, y, z), w, l, h, yaw);
}

/// A track record set where frame f holds the given records.
inline TrajectorySet single_track(std::size_t frames, std::int64_t id, const ObjectState3D& s) {
  TrajectorySet t;
  t.frames.resize(frames);
  for (auto& f : t.frames) f.push_back({id, s, 1.0});
  return t;
}

/// One static camera looking along +x at the origin from (-10, 0, 1.5).
inline SceneConfig basic_scene(std::uint64_t seed = 7) {
  SceneConfig cfg;
  cfg.seed = seed;
  cfg.frame_rate = 10.0;
  cfg.duration = 2.0;
  cfg.cameras.push_back(CameraModel::look_at(1, Vec3(-10, 0, 1.5), Vec3(0, 0, 0.8), 200.0, 320, 192));
  return cfg;
}

inline ObjectSpec walker(std::int64_t id, std::vector<Waypoint> wps, double w = 0.6, double l = 0.6, double h = 1.7) {
  ObjectSpec o;
  o.identity = id;
  o.w = w;
  o.l = l;
  o.h = h;
  o.waypoints = std::move(wps);
  return o;
}

/// Retrieval sets drawn from simulator detections: `identities` static
/// objects, the first frame's embeddings as gallery and the rest as probes.
struct ReidSets {
  std::vector<LabeledEmbedding> gallery, probes;
};

inline ReidSets simulated_reid_sets(std::uint64_t seed, int identities, double sigma, std::size_t frames) {
  SceneConfig cfg;
  cfg.seed = seed;
  cfg.frame_rate = 10.0;
  cfg.duration = static_cast<double>(frames) / cfg.frame_rate;
  cfg.noise.sigma_embedding = sigma;
  for (int i = 0; i < identities; ++i) {
    cfg.objects.push_back(walker(100 + i, {{0.0, Vec3(2.0 * i, 0, 0.85)}}));
  }
  ReidSets out;
  for (std::size_t f = 0; f < cfg.num_frames(); ++f) {
    const FrameTruth truth = frame_truth(cfg, f);
    const std::vector<Detection> dets = detections_from_truth(cfg, truth);
    for (std::size_t k = 0; k < dets.size(); ++k) {
      LabeledEmbedding e{dets[k].embedding.values(), truth.objects[k].identity};
      (f == 0 ? out.gallery : out.probes).push_back(std::move(e));
    }
  }
  return out;
}

inline std::vector<std::pair<std::int64_t, Eigen::VectorXd>> as_pairs(const std::vector<LabeledEmbedding>& v) {
  std::vector<std::pair<std::int64_t, Eigen::VectorXd>> out;
  for (const auto& e : v) out.emplace_back(e.identity, e.embedding);
  return out;
}

}  // namespace fixture
