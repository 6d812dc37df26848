#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "occtrack/json_io.hpp"
#include "occtrack/oae.hpp"
#include "occtrack/trajectory.hpp"
#include "occtrack/visibility.hpp"

namespace occtrack {

struct Detection {
  ObjectState3D state;
  Embedding embedding;
  /// False when fusion reported all views occluded; the association then
  /// ignores appearance for this detection and memories are left untouched.
  bool embedding_valid = true;
  double confidence = 1.0;
  std::vector<VisibilityScore> per_camera_visibility;
};

struct DetectionFrame {
  double time = 0.0;
  std::vector<Detection> detections;
};

struct TrackerParams {
  double gate_radius = 2.0;  // meters; infinity disables gating
  double alpha_emb = 1.0;
  double alpha_geo = 1.0;
  double memory_momentum = 0.9;
  double birth_conf = 0.3;
  int death_age = 5;
  double velocity_blend = 0.5;  // weight of the finite-difference velocity

  void validate() const;
};

TrackerParams tracker_params_from_json(const json& doc, const std::string& context);
json tracker_params_to_json(const TrackerParams& p);

/// Live queries ordered by track_id.
struct QueryBank {
  std::vector<Query> queries;
  std::int64_t next_track_id = 1;
  double frame_time = 0.0;
};

/// Constant-velocity propagation of every query; ages grow by one.
QueryBank predict(const QueryBank& bank, double dt);

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (query index, detection index)
  std::vector<std::size_t> unmatched_queries;
  std::vector<std::size_t> unmatched_detections;
};

/// Cost of pairing a query with a detection, or +infinity when the detection
/// lies outside the gate.
double association_cost(const Query& q, const Detection& d, const TrackerParams& params);

/// Optimal assignment over gated pairs: first maximizes the number of
/// admissible matches, then minimizes their total cost.
Assignment associate(const QueryBank& bank, std::span<const Detection> detections,
                     const TrackerParams& params);

/// Applies matches, births and deaths. `emitted`, when given, receives the
/// track ids that were matched or born this frame.
QueryBank update(const QueryBank& bank, const Assignment& assignment,
                 std::span<const Detection> detections, const TrackerParams& params,
                 std::vector<std::int64_t>* emitted = nullptr);

/// predict -> associate -> update per frame. Emits a record for every query
/// that was matched or born in the frame.
TrajectorySet run_sequence(std::span<const DetectionFrame> frames, const TrackerParams& params);

}  // namespace occtrack
