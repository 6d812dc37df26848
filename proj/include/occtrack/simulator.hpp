#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "occtrack/feature.hpp"
#include "occtrack/json_io.hpp"
#include "occtrack/oae.hpp"
#include "occtrack/tracker.hpp"
#include "occtrack/visibility.hpp"

namespace occtrack {

struct Waypoint {
  double time = 0.0;
  Vec3 position = Vec3::Zero();
};

struct ObjectSpec {
  std::int64_t identity = 0;
  std::string category = "object";
  double w = 1.0, l = 1.0, h = 1.0;
  double yaw = 0.0;
  std::vector<Waypoint> waypoints;  // strictly increasing times
};

struct NoiseConfig {
  double sigma_center = 0.0;     // m, per axis
  double sigma_dims = 0.0;       // m, per dimension
  double sigma_yaw = 0.0;        // rad
  double p_dropout = 0.0;
  double sigma_embedding = 0.0;  // expected norm of the additive embedding noise
};

struct SceneConfig {
  std::vector<CameraModel> cameras;
  std::vector<ObjectState3D> occluders;
  std::vector<ObjectSpec> objects;
  double frame_rate = 10.0;
  double duration = 1.0;
  NoiseConfig noise;
  std::uint64_t seed = 0;
  int embedding_dim = 32;
  std::vector<double> strides{8.0, 16.0};
  int visibility_grid = 32;
  double background_sigma = 0.01;
  bool write_pyramids = true;

  void validate() const;
  std::size_t num_frames() const;
  double frame_time(std::size_t frame) const { return static_cast<double>(frame) / frame_rate; }
};

SceneConfig scene_config_from_json(const json& doc, const std::string& context);
json scene_config_to_json(const SceneConfig& cfg);

struct ObjectTruth {
  std::int64_t identity = 0;
  std::string category;
  ObjectState3D state;
};

struct FrameTruth {
  std::size_t index = 0;
  double time = 0.0;
  std::vector<ObjectTruth> objects;
  /// visibility[c][k]: camera cfg.cameras[c], object objects[k].
  std::vector<std::vector<VisibilityScore>> visibility;
};

/// Unit appearance vector tied to an identity (seeded, independent of frames).
VecX identity_signature(const SceneConfig& cfg, std::int64_t identity);

/// Pose of an object at time t, or nothing outside its waypoint span.
/// Velocity is the slope of the active segment.
std::optional<ObjectState3D> object_state_at(const ObjectSpec& obj, double t);

FrameTruth frame_truth(const SceneConfig& cfg, std::size_t frame);

/// Painted pyramids, one per camera in cfg.cameras order: each cell takes the
/// signature (plus background-level noise) of the nearest object whose
/// projected rectangle covers the cell center, zero under a nearer occluder,
/// and pure noise elsewhere.
std::vector<FeaturePyramid> render_pyramids(const SceneConfig& cfg, const FrameTruth& truth);

struct Simulation {
  std::vector<FrameTruth> frames;
  /// pyramids[f][c]; left empty unless requested, since they dominate memory.
  std::vector<std::vector<FeaturePyramid>> pyramids;
};

Simulation simulate(const SceneConfig& cfg, bool with_pyramids = false, unsigned workers = 1);

std::vector<Detection> detections_from_truth(const SceneConfig& cfg, const FrameTruth& truth);

/// Replaces detection embeddings with occlusion-aware embeddings computed from
/// the painted pyramids: keypoints from each detected box, one view feature per
/// camera, fused with the detection's per-camera visibility.
struct OaeSettings {
  std::vector<Vec3> learned_offsets;
  double visibility_floor = kDefaultVisibilityFloor;
};
void apply_oae_embeddings(const SceneConfig& cfg, std::span<const FeaturePyramid> pyramids,
                          const OaeSettings& settings, std::vector<Detection>& detections);

/// Ground truth as a trajectory set keyed by identity.
TrajectorySet truth_trajectories(std::span<const FrameTruth> frames);

}  // namespace occtrack
