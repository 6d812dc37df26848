#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "occtrack/metrics.hpp"
#include "occtrack/simulator.hpp"
#include "occtrack/tracker.hpp"

namespace occtrack {

enum class EmbeddingSource { Detector, Oae };

/// Everything `pipeline` and `ablation` need: a scene, tracker parameters and
/// where detection embeddings come from ("detector": noisy signatures straight
/// from the simulator; "oae": keypoint sampling of the painted pyramids fused
/// across cameras by visibility).
struct ExperimentConfig {
  SceneConfig scene;
  TrackerParams tracker;
  EmbeddingSource embedding_source = EmbeddingSource::Oae;
  OaeSettings oae;
};

/// Accepts either an experiment document {schema_version, scene, tracker?,
/// embedding_source?, oae?} or a bare scene document (tracker defaults apply).
ExperimentConfig experiment_from_json(const json& doc, const std::string& context);
json experiment_to_json(const ExperimentConfig& cfg);

struct PipelineResult {
  std::vector<FrameTruth> truth;
  std::vector<DetectionFrame> detections;
  TrajectorySet ground_truth;
  TrajectorySet tracks;
  HotaReport report;
};

/// simulate -> detect (optionally with occlusion-aware embeddings) -> track ->
/// evaluate. Outputs do not depend on `workers`.
PipelineResult run_pipeline(const ExperimentConfig& cfg, unsigned workers = 1);

struct AblationResult {
  HotaReport with_oae;
  HotaReport without_oae;  // same detections, alpha_emb = 0
  double ass_a_delta() const noexcept { return with_oae.ass_a - without_oae.ass_a; }
};

AblationResult ablation_run(const ExperimentConfig& cfg, unsigned workers = 1);
json ablation_to_json(const AblationResult& r);

/// Entry point for the command-line tool; args exclude the program name.
/// Returns 0 on success, 1 on validation or usage errors, 2 on internal errors.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace occtrack
