#include "occtrack/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <ostream>
#include <thread>

#include "CLI11.hpp"

#include "occtrack/bench.hpp"
#include "occtrack/error.hpp"
#include "occtrack/objectives.hpp"
#include "occtrack/parallel.hpp"
#include "occtrack/records.hpp"
#include "occtrack/reid.hpp"

#ifndef OCCTRACK_VERSION
#define OCCTRACK_VERSION "0.0.0"
#endif

namespace occtrack {

namespace fs = std::filesystem;

ExperimentConfig experiment_from_json(const json& doc, const std::string& context) {
  if (!doc.is_object()) throw Error(ErrorKind::ConfigParseError, context + ": expected a JSON object");
  ExperimentConfig cfg;
  if (!doc.contains("scene")) {
    cfg.scene = scene_config_from_json(doc, context);
    return cfg;
  }
  StrictObject o(doc, context);
  if (o.get<int>("schema_version") != 1) {
    throw Error(ErrorKind::ConfigParseError, context + ": unsupported schema_version");
  }
  json scene = o.at("scene");
  if (scene.is_object() && !scene.contains("schema_version")) scene["schema_version"] = 1;
  cfg.scene = scene_config_from_json(scene, context + ".scene");
  if (o.has("tracker")) cfg.tracker = tracker_params_from_json(o.at("tracker"), context + ".tracker");
  if (o.has("embedding_source")) {
    const auto source = o.get<std::string>("embedding_source");
    if (source == "oae") {
      cfg.embedding_source = EmbeddingSource::Oae;
    } else if (source == "detector") {
      cfg.embedding_source = EmbeddingSource::Detector;
    } else {
      throw Error(ErrorKind::ConfigParseError,
                  context + ".embedding_source: expected \"oae\" or \"detector\", got \"" + source + "\"");
    }
  }
  if (o.has("oae")) {
    StrictObject oae(o.at("oae"), context + ".oae");
    for (const auto& p : oae.get_or<std::vector<std::array<double, 3>>>("learned_offsets", {})) {
      for (double c : p) {
        if (!(std::abs(c) <= 1.0)) {
          throw Error(ErrorKind::ConfigParseError, context + ".oae.learned_offsets: components must lie in [-1, 1]");
        }
      }
      cfg.oae.learned_offsets.emplace_back(p[0], p[1], p[2]);
    }
    cfg.oae.visibility_floor = oae.get_or("visibility_floor", cfg.oae.visibility_floor);
    if (!(cfg.oae.visibility_floor >= 0.0)) {
      throw Error(ErrorKind::ConfigParseError, context + ".oae.visibility_floor: must be >= 0");
    }
    oae.finish();
  }
  o.finish();
  return cfg;
}

json experiment_to_json(const ExperimentConfig& cfg) {
  json offsets = json::array();
  for (const Vec3& p : cfg.oae.learned_offsets) offsets.push_back({p.x(), p.y(), p.z()});
  return json{{"schema_version", 1},
              {"scene", scene_config_to_json(cfg.scene)},
              {"tracker", tracker_params_to_json(cfg.tracker)},
              {"embedding_source", cfg.embedding_source == EmbeddingSource::Oae ? "oae" : "detector"},
              {"oae", {{"learned_offsets", offsets}, {"visibility_floor", cfg.oae.visibility_floor}}}};
}

namespace {

std::vector<DetectionFrame> make_detection_frames(const ExperimentConfig& cfg, std::span<const FrameTruth> truth,
                                                  unsigned workers) {
  std::vector<DetectionFrame> frames(truth.size());
  parallel_for_chunks(truth.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t f = begin; f < end; ++f) {
      frames[f].time = truth[f].time;
      frames[f].detections = detections_from_truth(cfg.scene, truth[f]);
      if (cfg.embedding_source == EmbeddingSource::Oae) {
        const std::vector<FeaturePyramid> pyramids = render_pyramids(cfg.scene, truth[f]);
        apply_oae_embeddings(cfg.scene, pyramids, cfg.oae, frames[f].detections);
      }
    }
  });
  return frames;
}

}  // namespace

PipelineResult run_pipeline(const ExperimentConfig& cfg, unsigned workers) {
  PipelineResult r;
  r.truth = simulate(cfg.scene, false, workers).frames;
  r.detections = make_detection_frames(cfg, r.truth, workers);
  r.tracks = run_sequence(r.detections, cfg.tracker);
  r.ground_truth = truth_trajectories(r.truth);
  r.report = evaluate_hota(r.ground_truth, r.tracks, workers);
  return r;
}

AblationResult ablation_run(const ExperimentConfig& cfg, unsigned workers) {
  const std::vector<FrameTruth> truth = simulate(cfg.scene, false, workers).frames;
  const std::vector<DetectionFrame> detections = make_detection_frames(cfg, truth, workers);
  const TrajectorySet gt = truth_trajectories(truth);
  TrackerParams off = cfg.tracker;
  off.alpha_emb = 0.0;
  AblationResult r;
  r.with_oae = evaluate_hota(gt, run_sequence(detections, cfg.tracker), workers);
  r.without_oae = evaluate_hota(gt, run_sequence(detections, off), workers);
  return r;
}

json ablation_to_json(const AblationResult& r) {
  return json{{"schema_version", 1},
              {"with_oae", hota_report_to_json(r.with_oae)},
              {"without_oae", hota_report_to_json(r.without_oae)},
              {"delta",
               {{"hota", r.with_oae.hota - r.without_oae.hota},
                {"det_a", r.with_oae.det_a - r.without_oae.det_a},
                {"ass_a", r.ass_a_delta()},
                {"loc_a", r.with_oae.loc_a - r.without_oae.loc_a}}}};
}

namespace {

using Clock = std::chrono::steady_clock;

struct CommonOptions {
  unsigned workers = 1;
  std::uint64_t seed_override = 0;
  std::vector<CLI::Option*> seed_options;  // one per subcommand
  std::string out_dir;

  bool has_seed_override() const {
    return std::any_of(seed_options.begin(), seed_options.end(), [](const CLI::Option* o) { return o->count() > 0; });
  }
  unsigned resolved_workers() const {
    if (workers > 0) return workers;
    return std::max(1u, std::thread::hardware_concurrency());
  }
  fs::path resolve(const std::string& path) const {
    fs::path p(path);
    if (p.is_relative() && !out_dir.empty()) return fs::path(out_dir) / p;
    return p;
  }
};

class RunManifest {
 public:
  explicit RunManifest(std::string subcommand) : subcommand_(std::move(subcommand)) {}

  void set_config(json config) { config_ = std::move(config); }

  std::string read_input(const std::string& path) {
    std::string bytes = read_file_bytes(path);
    inputs_[path] = checksum_hex(bytes);
    return bytes;
  }

  void write_output(const fs::path& path, const std::string& label, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file_bytes(path, bytes);
    outputs_[label] = checksum_hex(bytes);
  }

  template <typename F>
  auto timed(const std::string& stage, F&& fn) {
    const auto start = Clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      timings_.emplace_back(stage, elapsed_ms(start));
    } else {
      auto result = fn();
      timings_.emplace_back(stage, elapsed_ms(start));
      return result;
    }
  }

  json to_json(unsigned workers) const {
    json timings = json::object();
    for (const auto& [stage, ms] : timings_) timings[stage] = ms;
    return json{{"tool_version", OCCTRACK_VERSION},
                {"subcommand", subcommand_},
                {"config", config_},
                {"inputs", inputs_},
                {"outputs", outputs_},
                {"runtime", {{"workers", workers}, {"timings_ms", timings}}}};
  }

  void write(const fs::path& path, unsigned workers) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file_bytes(path, to_json(workers).dump(2) + "\n");
  }

 private:
  static double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  }

  std::string subcommand_;
  json config_ = json::object();
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
  std::vector<std::pair<std::string, double>> timings_;
};

std::string manifest_path_for(const fs::path& out) { return out.string() + ".manifest.json"; }

ExperimentConfig load_experiment(RunManifest& m, const std::string& path, const CommonOptions& common) {
  const std::string bytes = m.read_input(path);
  ExperimentConfig cfg = experiment_from_json(parse_json_text(bytes, path), path);
  if (common.has_seed_override()) cfg.scene.seed = common.seed_override;
  m.set_config(experiment_to_json(cfg));
  return cfg;
}

std::string frame_file_name(std::size_t frame) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "pyramids/frame_%06zu.bin", frame);
  return buf;
}

// simulate --config <file> --out-dir <dir>
void cmd_simulate(const std::string& config, const CommonOptions& common) {
  RunManifest m("simulate");
  const ExperimentConfig cfg = load_experiment(m, config, common);
  const unsigned workers = common.resolved_workers();
  const fs::path dir(common.out_dir);

  const Simulation sim = m.timed("simulate", [&] { return simulate(cfg.scene, false, workers); });
  const auto detections = m.timed("detect", [&] { return make_detection_frames(cfg, sim.frames, workers); });
  m.timed("write_records", [&] {
    m.write_output(dir / "truth.ndjson", "truth.ndjson", truth_to_ndjson(sim.frames));
    m.write_output(dir / "gt_tracks.ndjson", "gt_tracks.ndjson",
                   trajectories_to_ndjson(truth_trajectories(sim.frames)));
    m.write_output(dir / "detections.ndjson", "detections.ndjson", detections_to_ndjson(detections));
  });
  if (cfg.scene.write_pyramids) {
    m.timed("pyramids", [&] {
      // Render in bounded batches so memory stays flat for long scenes.
      const std::size_t batch = std::max<std::size_t>(1, 4 * workers);
      for (std::size_t start = 0; start < sim.frames.size(); start += batch) {
        const std::size_t end = std::min(sim.frames.size(), start + batch);
        std::vector<std::string> encoded(end - start);
        parallel_for_chunks(end - start, workers, [&](std::size_t b, std::size_t e) {
          for (std::size_t i = b; i < e; ++i) encoded[i] = encode_pyramids(render_pyramids(cfg.scene, sim.frames[start + i]));
        });
        for (std::size_t i = 0; i < encoded.size(); ++i) {
          const std::string name = frame_file_name(start + i);
          m.write_output(dir / name, name, encoded[i]);
        }
      }
    });
  }
  m.write(dir / "manifest.json", workers);
}

// track --detections <file> --params <file> --out <file>
void cmd_track(const std::string& detections_path, const std::string& params_path, const std::string& out,
               const CommonOptions& common) {
  RunManifest m("track");
  const std::string det_bytes = m.read_input(detections_path);
  const std::string param_bytes = m.read_input(params_path);
  const TrackerParams params = tracker_params_from_json(parse_json_text(param_bytes, params_path), params_path);
  m.set_config(tracker_params_to_json(params));
  const auto frames = m.timed("parse", [&] { return detections_from_ndjson(det_bytes, detections_path); });
  const TrajectorySet tracks = m.timed("track", [&] { return run_sequence(frames, params); });
  const fs::path out_path = common.resolve(out);
  m.write_output(out_path, out_path.string(), trajectories_to_ndjson(tracks));
  m.write(manifest_path_for(out_path), common.resolved_workers());
}

// eval --gt <file> --pred <file> --out <file> [--csv <file>]
void cmd_eval(const std::string& gt_path, const std::string& pred_path, const std::string& out, std::string csv,
              const CommonOptions& common) {
  RunManifest m("eval");
  const std::string gt_bytes = m.read_input(gt_path);
  const std::string pred_bytes = m.read_input(pred_path);
  TrajectorySet gt = trajectories_from_ndjson(gt_bytes, gt_path);
  TrajectorySet pred = trajectories_from_ndjson(pred_bytes, pred_path);
  // Trailing frames without records are implicit in the NDJSON form.
  const std::size_t frames = std::max(gt.num_frames(), pred.num_frames());
  gt.frames.resize(frames);
  pred.frames.resize(frames);
  const unsigned workers = common.resolved_workers();
  const HotaReport report = m.timed("evaluate", [&] { return evaluate_hota(gt, pred, workers); });
  const fs::path out_path = common.resolve(out);
  if (csv.empty()) csv = (out_path.parent_path() / (out_path.stem().string() + "_per_alpha.csv")).string();
  const fs::path csv_path = common.resolve(csv);
  m.set_config(json{{"frames", frames}});
  m.write_output(out_path, out_path.string(), hota_report_to_json(report).dump(2) + "\n");
  m.write_output(csv_path, csv_path.string(), hota_report_to_csv(report));
  m.write(manifest_path_for(out_path), workers);
}

// reid-eval --gallery <file> --probes <file> --out <file>
void cmd_reid(const std::string& gallery_path, const std::string& probes_path, const std::string& out,
              const CommonOptions& common) {
  RunManifest m("reid-eval");
  const auto gallery = labeled_embeddings_from_json(parse_json_text(m.read_input(gallery_path), gallery_path),
                                                    gallery_path);
  const auto probes = labeled_embeddings_from_json(parse_json_text(m.read_input(probes_path), probes_path),
                                                   probes_path);
  const ReidReport report = m.timed("evaluate", [&] { return reid_evaluate(gallery, probes); });
  const fs::path out_path = common.resolve(out);
  m.set_config(json{{"gallery_size", gallery.size()}, {"probe_count", probes.size()}});
  m.write_output(out_path, out_path.string(), reid_report_to_json(report).dump(2) + "\n");
  m.write(manifest_path_for(out_path), common.resolved_workers());
}

// bench-msda --config <file> --out <file> [--mode full|half]
void cmd_bench(const std::string& config, const std::string& out, const std::string& mode,
               const CommonOptions& common) {
  RunManifest m("bench-msda");
  BenchWorkload w = bench_workload_from_json(parse_json_text(m.read_input(config), config));
  if (common.has_seed_override()) w.seed = common.seed_override;
  const PrecisionMode precision = mode == "half" ? PrecisionMode::PackedHalf : PrecisionMode::Full;
  m.set_config(json{{"workload", bench_workload_to_json(w)}, {"mode", mode}});
  const unsigned workers = common.resolved_workers();
  const BenchReport report = m.timed("bench", [&] { return bench_msda(w, precision, workers); });
  const fs::path out_path = common.resolve(out);
  m.write_output(out_path, out_path.string(), bench_report_to_json(report).dump(2) + "\n");
  m.write(manifest_path_for(out_path), workers);
}

// losses-check --out <file> [--instances N] [--seed S]; returns false when a check fails
bool cmd_losses(const std::string& out, int instances, std::uint64_t seed, const CommonOptions& common,
                std::ostream& err) {
  RunManifest m("losses-check");
  if (common.has_seed_override()) seed = common.seed_override;
  if (instances < 1) throw Error(ErrorKind::InvalidArgument, "--instances must be >= 1");
  constexpr double kTolerance = 1e-4;
  m.set_config(json{{"instances", instances}, {"seed", seed}, {"tolerance", kTolerance}});
  const auto checks = m.timed("gradient_checks", [&] { return run_gradient_checks(instances, seed, kTolerance); });
  const fs::path out_path = common.resolve(out);
  m.write_output(out_path, out_path.string(), gradient_checks_to_json(checks, kTolerance).dump(2) + "\n");
  m.write(manifest_path_for(out_path), common.resolved_workers());
  bool ok = true;
  for (const auto& c : checks) {
    if (!c.passed) {
      err << "gradient check failed for " << c.loss << " (worst relative error " << c.worst_relative_error << ")\n";
      ok = false;
    }
  }
  return ok;
}

// pipeline --config <file> --out-dir <dir>
void cmd_pipeline(const std::string& config, const CommonOptions& common) {
  RunManifest m("pipeline");
  const ExperimentConfig cfg = load_experiment(m, config, common);
  const unsigned workers = common.resolved_workers();
  const fs::path dir(common.out_dir);
  const auto truth = m.timed("simulate", [&] { return simulate(cfg.scene, false, workers).frames; });
  const auto detections = m.timed("detect", [&] { return make_detection_frames(cfg, truth, workers); });
  const TrajectorySet tracks = m.timed("track", [&] { return run_sequence(detections, cfg.tracker); });
  const TrajectorySet gt = truth_trajectories(truth);
  const HotaReport report = m.timed("evaluate", [&] { return evaluate_hota(gt, tracks, workers); });
  m.timed("write", [&] {
    m.write_output(dir / "truth.ndjson", "truth.ndjson", truth_to_ndjson(truth));
    m.write_output(dir / "gt_tracks.ndjson", "gt_tracks.ndjson", trajectories_to_ndjson(gt));
    m.write_output(dir / "detections.ndjson", "detections.ndjson", detections_to_ndjson(detections));
    m.write_output(dir / "tracks.ndjson", "tracks.ndjson", trajectories_to_ndjson(tracks));
    m.write_output(dir / "hota.json", "hota.json", hota_report_to_json(report).dump(2) + "\n");
    m.write_output(dir / "hota_per_alpha.csv", "hota_per_alpha.csv", hota_report_to_csv(report));
  });
  m.write(dir / "manifest.json", workers);
}

// ablation --config <file> --out-dir <dir>
void cmd_ablation(const std::string& config, const CommonOptions& common, std::ostream& out) {
  RunManifest m("ablation");
  const ExperimentConfig cfg = load_experiment(m, config, common);
  const unsigned workers = common.resolved_workers();
  const fs::path dir(common.out_dir);
  const AblationResult r = m.timed("ablation", [&] { return ablation_run(cfg, workers); });
  m.write_output(dir / "ablation.json", "ablation.json", ablation_to_json(r).dump(2) + "\n");
  m.write_output(dir / "with_oae_per_alpha.csv", "with_oae_per_alpha.csv", hota_report_to_csv(r.with_oae));
  m.write_output(dir / "without_oae_per_alpha.csv", "without_oae_per_alpha.csv", hota_report_to_csv(r.without_oae));
  m.write(dir / "manifest.json", workers);
  char line[160];
  std::snprintf(line, sizeof line, "AssA with OAE %.6f, without %.6f, delta %+.6f\n", r.with_oae.ass_a,
                r.without_oae.ass_a, r.ass_a_delta());
  out << line;
}

void add_common(CLI::App* sub, CommonOptions& common, bool out_dir_required) {
  sub->add_option("--workers", common.workers, "Worker threads (0 = all cores); outputs do not depend on it")
      ->capture_default_str();
  common.seed_options.push_back(sub->add_option("--seed-override", common.seed_override, "Replace the configured seed"));
  auto* dir = sub->add_option("--out-dir", common.out_dir,
                              out_dir_required ? "Output directory" : "Base directory for relative output paths");
  if (out_dir_required) dir->required();
}

const std::vector<std::string> kSubcommands{"simulate",     "track",    "eval",     "reid-eval",
                                            "bench-msda",   "losses-check", "pipeline", "ablation"};

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Occlusion-aware multi-camera 3D tracking toolkit", "occtrack"};
  app.set_version_flag("--version", std::string(OCCTRACK_VERSION));
  app.require_subcommand(1);
  CommonOptions common;

  std::string config, detections, params, out_file, gt, pred, csv, gallery, probes, mode = "full";
  int instances = 100;
  std::uint64_t loss_seed = 0;

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic scene: truth, detections, pyramids");
  sim->add_option("--config", config, "Scene or experiment JSON")->required();
  add_common(sim, common, true);

  auto* track = app.add_subcommand("track", "Run the tracker over NDJSON detections");
  track->add_option("--detections", detections, "Detections NDJSON")->required();
  track->add_option("--params", params, "Tracker parameter JSON")->required();
  track->add_option("--out", out_file, "Trajectory NDJSON to write")->required();
  add_common(track, common, false);

  auto* eval = app.add_subcommand("eval", "HOTA evaluation of predicted trajectories");
  eval->add_option("--gt", gt, "Ground-truth trajectory NDJSON")->required();
  eval->add_option("--pred", pred, "Predicted trajectory NDJSON")->required();
  eval->add_option("--out", out_file, "HOTA report JSON to write")->required();
  eval->add_option("--csv", csv, "Per-alpha CSV (default: <out stem>_per_alpha.csv)");
  add_common(eval, common, false);

  auto* reid = app.add_subcommand("reid-eval", "Rank a probe set against a gallery");
  reid->add_option("--gallery", gallery, "Gallery embeddings JSON")->required();
  reid->add_option("--probes", probes, "Probe embeddings JSON")->required();
  reid->add_option("--out", out_file, "Retrieval report JSON to write")->required();
  add_common(reid, common, false);

  auto* bench = app.add_subcommand("bench-msda", "Time the optimized sampling kernel against the reference");
  bench->add_option("--config", config, "Benchmark workload JSON")->required();
  bench->add_option("--out", out_file, "Throughput report JSON to write")->required();
  bench->add_option("--mode", mode, "Precision mode")->check(CLI::IsMember({"full", "half"}))->capture_default_str();
  add_common(bench, common, false);

  auto* losses = app.add_subcommand("losses-check", "Finite-difference checks of every loss gradient");
  losses->add_option("--out", out_file, "Report JSON to write")->required();
  losses->add_option("--instances", instances, "Random instances per loss")->capture_default_str();
  losses->add_option("--seed", loss_seed, "Seed for the random instances")->capture_default_str();
  add_common(losses, common, false);

  auto* pipeline = app.add_subcommand("pipeline", "simulate, track and evaluate from one config");
  pipeline->add_option("--config", config, "Scene or experiment JSON")->required();
  add_common(pipeline, common, true);

  auto* ablation = app.add_subcommand("ablation", "Compare association with and without appearance");
  ablation->add_option("--config", config, "Scene or experiment JSON")->required();
  add_common(ablation, common, true);

  if (args.empty()) {
    err << app.help();
    return 1;
  }
  if (!args.front().empty() && args.front().front() != '-' &&
      std::find(kSubcommands.begin(), kSubcommands.end(), args.front()) == kSubcommands.end()) {
    err << "UnknownSubcommand: '" << args.front() << "'; expected one of:";
    for (const auto& s : kSubcommands) err << ' ' << s;
    err << "\n";
    return 1;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) {
      cmd_simulate(config, common);
    } else if (track->parsed()) {
      cmd_track(detections, params, out_file, common);
    } else if (eval->parsed()) {
      cmd_eval(gt, pred, out_file, csv, common);
    } else if (reid->parsed()) {
      cmd_reid(gallery, probes, out_file, common);
    } else if (bench->parsed()) {
      cmd_bench(config, out_file, mode, common);
    } else if (losses->parsed()) {
      if (!cmd_losses(out_file, instances, loss_seed, common, err)) return 1;
    } else if (pipeline->parsed()) {
      cmd_pipeline(config, common);
    } else if (ablation->parsed()) {
      cmd_ablation(config, common, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: Io: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace occtrack
