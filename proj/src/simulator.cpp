#include "occtrack/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "occtrack/error.hpp"
#include "occtrack/parallel.hpp"
#include "occtrack/rng.hpp"

namespace occtrack {

void SceneConfig::validate() const {
  if (!(frame_rate > 0.0)) throw Error(ErrorKind::InvalidArgument, "frame_rate must be positive");
  if (!(duration > 0.0)) throw Error(ErrorKind::InvalidArgument, "duration must be positive");
  if (embedding_dim < 2 || embedding_dim % 2 != 0) {
    throw Error(ErrorKind::InvalidArgument, "embedding_dim must be even and >= 2");
  }
  if (strides.empty()) throw Error(ErrorKind::InvalidArgument, "at least one pyramid stride is required");
  for (std::size_t i = 0; i < strides.size(); ++i) {
    if (!(strides[i] > 0.0) || (i > 0 && !(strides[i] > strides[i - 1]))) {
      throw Error(ErrorKind::InvalidArgument, "pyramid strides must be positive and strictly increasing");
    }
  }
  if (visibility_grid < 2) throw Error(ErrorKind::InvalidArgument, "visibility_grid must be >= 2");
  if (!(background_sigma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "background_sigma must be >= 0");
  const NoiseConfig& n = noise;
  if (!(n.sigma_center >= 0.0) || !(n.sigma_dims >= 0.0) || !(n.sigma_yaw >= 0.0) || !(n.sigma_embedding >= 0.0) ||
      !(n.p_dropout >= 0.0 && n.p_dropout <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "noise parameters out of range");
  }
  std::set<std::int64_t> ids;
  for (const ObjectSpec& o : objects) {
    if (!ids.insert(o.identity).second) {
      throw Error(ErrorKind::InvalidArgument, "duplicate object identity " + std::to_string(o.identity));
    }
    if (o.waypoints.empty()) {
      throw Error(ErrorKind::InvalidWaypoints, "object " + std::to_string(o.identity) + " has no waypoints");
    }
    for (std::size_t i = 1; i < o.waypoints.size(); ++i) {
      if (!(o.waypoints[i].time > o.waypoints[i - 1].time)) {
        throw Error(ErrorKind::InvalidWaypoints,
                    "object " + std::to_string(o.identity) + " waypoint times are not strictly increasing");
      }
    }
    if (!(o.w > 0.0 && o.l > 0.0 && o.h > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "object " + std::to_string(o.identity) + " has non-positive dims");
    }
  }
}

std::size_t SceneConfig::num_frames() const {
  return static_cast<std::size_t>(std::max<long long>(1, std::llround(duration * frame_rate)));
}

SceneConfig scene_config_from_json(const json& doc, const std::string& context) {
  StrictObject o(doc, context);
  if (o.get<int>("schema_version") != 1) {
    throw Error(ErrorKind::ConfigParseError, context + ": unsupported schema_version");
  }
  SceneConfig cfg;
  cfg.seed = o.get<std::uint64_t>("seed");
  cfg.frame_rate = o.get<double>("frame_rate");
  cfg.duration = o.get<double>("duration");
  cfg.embedding_dim = o.get_or("embedding_dim", cfg.embedding_dim);
  cfg.strides = o.get_or("strides", cfg.strides);
  cfg.visibility_grid = o.get_or("visibility_grid", cfg.visibility_grid);
  cfg.background_sigma = o.get_or("background_sigma", cfg.background_sigma);
  cfg.write_pyramids = o.get_or("write_pyramids", cfg.write_pyramids);
  cfg.cameras = load_camera_network(o.at("cameras"));

  if (o.has("noise")) {
    StrictObject n(o.at("noise"), context + ".noise");
    cfg.noise.sigma_center = n.get_or("sigma_center", 0.0);
    cfg.noise.sigma_dims = n.get_or("sigma_dims", 0.0);
    cfg.noise.sigma_yaw = n.get_or("sigma_yaw", 0.0);
    cfg.noise.p_dropout = n.get_or("p_dropout", 0.0);
    cfg.noise.sigma_embedding = n.get_or("sigma_embedding", 0.0);
    n.finish();
  }
  if (o.has("occluders")) {
    const json& occ = o.at("occluders");
    if (!occ.is_array()) throw Error(ErrorKind::ConfigParseError, context + ".occluders: expected an array");
    for (std::size_t i = 0; i < occ.size(); ++i) {
      cfg.occluders.push_back(state_from_json(occ[i], context + ".occluders[" + std::to_string(i) + "]"));
    }
  }
  const json& objs = o.at("objects");
  if (!objs.is_array()) throw Error(ErrorKind::ConfigParseError, context + ".objects: expected an array");
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const std::string where = context + ".objects[" + std::to_string(i) + "]";
    StrictObject ob(objs[i], where);
    ObjectSpec spec;
    spec.identity = ob.get<std::int64_t>("identity");
    spec.category = ob.get_or<std::string>("category", spec.category);
    const auto dims = ob.get<std::array<double, 3>>("dims");
    spec.w = dims[0];
    spec.l = dims[1];
    spec.h = dims[2];
    spec.yaw = ob.get_or("yaw", 0.0);
    const auto wps = ob.get<std::vector<std::array<double, 4>>>("waypoints");
    for (const auto& wp : wps) spec.waypoints.push_back({wp[0], Vec3(wp[1], wp[2], wp[3])});
    ob.finish();
    cfg.objects.push_back(std::move(spec));
  }
  o.finish();
  try {
    cfg.validate();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidWaypoints) throw;
    throw Error(ErrorKind::ConfigParseError, context + ": " + e.what());
  }
  return cfg;
}

json scene_config_to_json(const SceneConfig& cfg) {
  json cams = json::array();
  for (const auto& c : cfg.cameras) cams.push_back(camera_to_json(c));
  json occ = json::array();
  for (const auto& s : cfg.occluders) {
    json j = state_to_json(s);
    j.erase("vx");
    j.erase("vy");
    j.erase("vz");
    occ.push_back(std::move(j));
  }
  json objs = json::array();
  for (const auto& ob : cfg.objects) {
    json wps = json::array();
    for (const auto& wp : ob.waypoints) wps.push_back({wp.time, wp.position.x(), wp.position.y(), wp.position.z()});
    objs.push_back({{"identity", ob.identity},
                    {"category", ob.category},
                    {"dims", {ob.w, ob.l, ob.h}},
                    {"yaw", ob.yaw},
                    {"waypoints", wps}});
  }
  return json{{"schema_version", 1},
              {"seed", cfg.seed},
              {"frame_rate", cfg.frame_rate},
              {"duration", cfg.duration},
              {"embedding_dim", cfg.embedding_dim},
              {"strides", cfg.strides},
              {"visibility_grid", cfg.visibility_grid},
              {"background_sigma", cfg.background_sigma},
              {"write_pyramids", cfg.write_pyramids},
              {"noise",
               {{"sigma_center", cfg.noise.sigma_center},
                {"sigma_dims", cfg.noise.sigma_dims},
                {"sigma_yaw", cfg.noise.sigma_yaw},
                {"p_dropout", cfg.noise.p_dropout},
                {"sigma_embedding", cfg.noise.sigma_embedding}}},
              {"cameras", cams},
              {"occluders", occ},
              {"objects", objs}};
}

VecX identity_signature(const SceneConfig& cfg, std::int64_t identity) {
  auto rng = substream(cfg.seed, "signature", static_cast<std::uint64_t>(identity));
  std::normal_distribution<double> normal(0.0, 1.0);
  VecX v(cfg.embedding_dim);
  do {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  } while (!(v.norm() > 0.0));
  return v.normalized();
}

std::optional<ObjectState3D> object_state_at(const ObjectSpec& obj, double t) {
  const auto& wp = obj.waypoints;
  if (wp.size() == 1) return ObjectState3D(wp.front().position, obj.w, obj.l, obj.h, obj.yaw);
  if (t < wp.front().time || t > wp.back().time) return std::nullopt;
  std::size_t k = 0;
  while (k + 2 < wp.size() && t >= wp[k + 1].time) ++k;
  const double span = wp[k + 1].time - wp[k].time;
  const Vec3 velocity = (wp[k + 1].position - wp[k].position) / span;
  const Vec3 center = wp[k].position + velocity * (t - wp[k].time);
  return ObjectState3D(center, obj.w, obj.l, obj.h, obj.yaw, velocity);
}

FrameTruth frame_truth(const SceneConfig& cfg, std::size_t frame) {
  FrameTruth truth;
  truth.index = frame;
  truth.time = cfg.frame_time(frame);
  for (const ObjectSpec& o : cfg.objects) {
    if (auto s = object_state_at(o, truth.time)) truth.objects.push_back({o.identity, o.category, *s});
  }
  truth.visibility.resize(cfg.cameras.size());
  std::vector<ObjectState3D> blockers;
  for (std::size_t c = 0; c < cfg.cameras.size(); ++c) {
    for (std::size_t k = 0; k < truth.objects.size(); ++k) {
      blockers.assign(cfg.occluders.begin(), cfg.occluders.end());
      for (std::size_t j = 0; j < truth.objects.size(); ++j) {
        if (j != k) blockers.push_back(truth.objects[j].state);
      }
      truth.visibility[c].push_back(visible_fraction(cfg.cameras[c], truth.objects[k].state, blockers,
                                                     cfg.visibility_grid,
                                                     static_cast<int>(truth.objects[k].identity)));
    }
  }
  return truth;
}

namespace {

struct PaintEntity {
  PixelRect rect;
  double depth;
  const VecX* signature;  // null for occluders
};

}  // namespace

std::vector<FeaturePyramid> render_pyramids(const SceneConfig& cfg, const FrameTruth& truth) {
  std::vector<VecX> signatures;
  signatures.reserve(truth.objects.size());
  for (const auto& o : truth.objects) signatures.push_back(identity_signature(cfg, o.identity));

  const int dim = cfg.embedding_dim;
  std::vector<FeaturePyramid> out;
  out.reserve(cfg.cameras.size());
  for (std::size_t c = 0; c < cfg.cameras.size(); ++c) {
    const CameraModel& cam = cfg.cameras[c];
    std::vector<PaintEntity> entities;
    auto add = [&](const ObjectState3D& s, const VecX* sig) {
      try {
        const ProjectedRect r = projected_rect(cam, s);
        entities.push_back({r.rect, r.mean_depth, sig});
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::FullyBehindCamera) throw;
      }
    };
    for (std::size_t k = 0; k < truth.objects.size(); ++k) add(truth.objects[k].state, &signatures[k]);
    for (const auto& occ : cfg.occluders) add(occ, nullptr);

    auto rng = substream(cfg.seed, "painting", truth.index, c);
    std::normal_distribution<float> noise(0.0f, static_cast<float>(cfg.background_sigma));
    std::vector<FeatureLevel> levels;
    for (double stride : cfg.strides) {
      FeatureLevel level;
      level.stride = stride;
      level.width = static_cast<int>(std::ceil(cam.image_width() / stride));
      level.height = static_cast<int>(std::ceil(cam.image_height() / stride));
      level.values.resize(static_cast<std::size_t>(level.width) * level.height * dim);
      float* cell = level.values.data();
      for (int y = 0; y < level.height; ++y) {
        const double py = (y + 0.5) * stride;
        for (int x = 0; x < level.width; ++x, cell += dim) {
          const double px = (x + 0.5) * stride;
          const PaintEntity* nearest = nullptr;
          for (const PaintEntity& e : entities) {
            if (e.rect.contains(px, py) && (!nearest || e.depth < nearest->depth)) nearest = &e;
          }
          for (int ch = 0; ch < dim; ++ch) {
            const float n = cfg.background_sigma > 0.0 ? noise(rng) : 0.0f;
            if (nearest && !nearest->signature) {
              cell[ch] = 0.0f;
            } else if (nearest) {
              cell[ch] = static_cast<float>((*nearest->signature)[ch]) + n;
            } else {
              cell[ch] = n;
            }
          }
        }
      }
      levels.push_back(std::move(level));
    }
    out.emplace_back(cam.id(), dim, std::move(levels));
  }
  return out;
}

Simulation simulate(const SceneConfig& cfg, bool with_pyramids, unsigned workers) {
  cfg.validate();
  Simulation sim;
  const std::size_t n = cfg.num_frames();
  sim.frames.resize(n);
  if (with_pyramids) sim.pyramids.resize(n);
  parallel_for_chunks(n, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t f = begin; f < end; ++f) {
      sim.frames[f] = frame_truth(cfg, f);
      if (with_pyramids) sim.pyramids[f] = render_pyramids(cfg, sim.frames[f]);
    }
  });
  return sim;
}

std::vector<Detection> detections_from_truth(const SceneConfig& cfg, const FrameTruth& truth) {
  auto dropout_rng = substream(cfg.seed, "dropout", truth.index);
  auto noise_rng = substream(cfg.seed, "noise", truth.index);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const NoiseConfig& nz = cfg.noise;
  const double embed_scale = nz.sigma_embedding / std::sqrt(static_cast<double>(cfg.embedding_dim));

  std::vector<Detection> dets;
  for (std::size_t k = 0; k < truth.objects.size(); ++k) {
    const ObjectState3D& s = truth.objects[k].state;
    // Draw every variate for every object so each stream stays aligned
    // regardless of which objects drop out.
    const bool dropped = uniform(dropout_rng) < nz.p_dropout;
    Vec3 center = s.center();
    for (int a = 0; a < 3; ++a) center[a] += nz.sigma_center * normal(noise_rng);
    std::array<double, 3> dims{s.w(), s.l(), s.h()};
    for (double& d : dims) d = std::max(d + nz.sigma_dims * normal(noise_rng), 0.05);
    const double yaw = s.yaw() + nz.sigma_yaw * normal(noise_rng);
    VecX emb = identity_signature(cfg, truth.objects[k].identity);
    for (Eigen::Index i = 0; i < emb.size(); ++i) emb[i] += embed_scale * normal(noise_rng);
    if (dropped) continue;

    Detection d;
    d.state = ObjectState3D(center, dims[0], dims[1], dims[2], yaw, s.velocity());
    d.embedding = Embedding::normalized(emb);
    double vis_sum = 0.0;
    for (std::size_t c = 0; c < truth.visibility.size(); ++c) {
      d.per_camera_visibility.push_back(truth.visibility[c][k]);
      vis_sum += truth.visibility[c][k].value;
    }
    d.confidence = truth.visibility.empty() ? 0.0 : vis_sum / static_cast<double>(truth.visibility.size());
    dets.push_back(std::move(d));
  }
  return dets;
}

void apply_oae_embeddings(const SceneConfig& cfg, std::span<const FeaturePyramid> pyramids,
                          const OaeSettings& settings, std::vector<Detection>& detections) {
  if (pyramids.size() != cfg.cameras.size()) {
    throw Error(ErrorKind::LengthMismatch, "one pyramid per camera is required");
  }
  // No learned query state exists at detection time; a zero descriptor gives
  // every keypoint the same weight.
  const VecX descriptor = VecX::Zero(cfg.embedding_dim);
  std::vector<ViewFeature> views(cfg.cameras.size());
  for (Detection& d : detections) {
    const KeypointSet kp = generate_keypoints(d.state, settings.learned_offsets);
    for (std::size_t c = 0; c < cfg.cameras.size(); ++c) {
      views[c] = extract_view_feature(pyramids[c], cfg.cameras[c], kp, descriptor);
    }
    const FusionResult fused = fuse_embedding(views, d.per_camera_visibility, settings.visibility_floor);
    d.embedding_valid = !fused.all_occluded;
    d.embedding = fused.embedding;
  }
}

TrajectorySet truth_trajectories(std::span<const FrameTruth> frames) {
  TrajectorySet out;
  out.frames.resize(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    for (const auto& o : frames[f].objects) out.frames[f].push_back({o.identity, o.state, 1.0});
  }
  return out;
}

}  // namespace occtrack
