#include "occtrack/bench.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

#include "occtrack/error.hpp"

namespace occtrack {

BenchWorkload bench_workload_from_json(const json& doc) {
  StrictObject o(doc, "workload");
  const int version = o.get<int>("schema_version");
  if (version != 1) throw Error(ErrorKind::ConfigParseError, "workload: unsupported schema_version");
  BenchWorkload w;
  w.cameras = o.get_or("cameras", w.cameras);
  w.levels = o.get_or("levels", w.levels);
  w.channels = o.get_or("channels", w.channels);
  w.queries = o.get_or("queries", w.queries);
  w.points_per_query = o.get_or("points_per_query", w.points_per_query);
  w.repetitions = o.get_or("repetitions", w.repetitions);
  w.base_height = o.get_or("base_height", w.base_height);
  w.base_width = o.get_or("base_width", w.base_width);
  w.fps = o.get_or("fps", w.fps);
  w.seed = o.get_or<std::uint64_t>("seed", w.seed);
  o.finish();
  if (w.cameras < 1 || w.levels < 1 || w.channels < 2 || w.queries < 0 || w.points_per_query < 1 ||
      w.repetitions < 0 || w.base_height < 1 || w.base_width < 1 || !(w.fps > 0.0)) {
    throw Error(ErrorKind::ConfigParseError, "workload: field out of range");
  }
  if (w.channels % 2 != 0) throw Error(ErrorKind::OddChannelCount, "workload: channels must be even");
  return w;
}

json bench_workload_to_json(const BenchWorkload& w) {
  return json{{"schema_version", 1},          {"cameras", w.cameras},
              {"levels", w.levels},           {"channels", w.channels},
              {"queries", w.queries},         {"points_per_query", w.points_per_query},
              {"repetitions", w.repetitions}, {"base_height", w.base_height},
              {"base_width", w.base_width},   {"fps", w.fps},
              {"seed", w.seed}};
}

BenchInputs make_bench_inputs(const BenchWorkload& w) {
  std::mt19937_64 rng(w.seed);
  std::uniform_real_distribution<float> feature(-1.0f, 1.0f);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);

  BenchInputs in;
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (int cam = 0; cam < w.cameras; ++cam) {
    std::vector<FeatureLevel> levels;
    int h = w.base_height, wd = w.base_width;
    double stride = 8.0;
    for (int l = 0; l < w.levels; ++l) {
      FeatureLevel level;
      level.height = h;
      level.width = wd;
      level.stride = stride;
      level.values.resize(static_cast<std::size_t>(h) * wd * w.channels);
      for (float& v : level.values) v = feature(rng);
      hash = fnv1a64(level.values.data(), level.values.size() * sizeof(float), hash);
      levels.push_back(std::move(level));
      h = std::max(1, h / 2);
      wd = std::max(1, wd / 2);
      stride *= 2.0;
    }
    in.pyramids.emplace_back(cam, w.channels, std::move(levels));
  }

  // Each query point is observed by every camera at every level, mirroring a
  // keypoint projected into all views of the network.
  in.plan.queries.resize(static_cast<std::size_t>(w.queries));
  for (auto& query : in.plan.queries) {
    query.reserve(static_cast<std::size_t>(w.points_per_query) * w.cameras * w.levels);
    for (int p = 0; p < w.points_per_query; ++p) {
      const float nu = unit(rng);
      const float nv = unit(rng);
      for (int cam = 0; cam < w.cameras; ++cam) {
        for (int l = 0; l < w.levels; ++l) {
          const FeatureLevel& level = in.pyramids[static_cast<std::size_t>(cam)].level(l);
          SampleTuple t;
          t.camera_id = cam;
          t.level = l;
          t.u = nu * static_cast<float>(level.width) - 0.5f;
          t.v = nv * static_cast<float>(level.height) - 0.5f;
          t.weight = unit(rng);
          query.push_back(t);
        }
      }
    }
    hash = fnv1a64(query.data(), query.size() * sizeof(SampleTuple), hash);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  in.checksum = buf;
  return in;
}

std::string host_description() {
  std::string desc;
  utsname u{};
  if (uname(&u) == 0) desc = std::string(u.sysname) + " " + u.release + " " + u.machine;
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) desc += ";" + line.substr(colon + 1);
      break;
    }
  }
#if defined(__VERSION__)
  desc += "; compiler " __VERSION__;
#endif
#if defined(__AVX2__) && defined(__F16C__)
  desc += "; simd avx2+f16c";
#else
  desc += "; simd portable";
#endif
  return desc;
}

std::int64_t cameras_supported(double seconds_per_invocation, int cameras, double fps) {
  if (!(seconds_per_invocation > 0.0) || cameras < 1) return 0;
  const double per_camera = seconds_per_invocation / cameras;
  return static_cast<std::int64_t>(std::floor(1.0 / (fps * per_camera)));
}

namespace {

template <typename Fn>
TimingStats time_runs(int repetitions, Fn&& fn) {
  std::vector<double> ms;
  ms.reserve(static_cast<std::size_t>(repetitions));
  for (int r = 0; r < repetitions; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  TimingStats s;
  s.min_ms = *std::min_element(ms.begin(), ms.end());
  s.max_ms = *std::max_element(ms.begin(), ms.end());
  double sum = 0.0;
  for (double v : ms) sum += v;
  s.mean_ms = sum / static_cast<double>(ms.size());
  return s;
}

}  // namespace

BenchReport bench_msda(const BenchWorkload& w, PrecisionMode mode, unsigned workers) {
  BenchReport report;
  report.workload = w;
  report.mode = mode;
  report.workers = std::max(1u, workers);
  report.host = host_description();
  report.timer_resolution_ns =
      1e9 * static_cast<double>(std::chrono::steady_clock::period::num) /
      static_cast<double>(std::chrono::steady_clock::period::den);
  if (w.repetitions == 0) return report;

  const BenchInputs in = make_bench_inputs(w);
  report.input_checksum = in.checksum;

  MsdaResult ref, opt;
  report.reference = time_runs(w.repetitions, [&] { ref = msda_reference(in.pyramids, in.plan); });
  MsdaOptions options;
  options.workers = report.workers;
  report.optimized =
      time_runs(w.repetitions, [&] { opt = msda_optimized(in.pyramids, in.plan, mode, options); });
  report.measured = true;
  report.speedup = report.optimized.mean_ms > 0.0 ? report.reference.mean_ms / report.optimized.mean_ms : 0.0;
  report.cameras_supported_reference = cameras_supported(report.reference.mean_ms / 1e3, w.cameras, w.fps);
  report.cameras_supported_optimized = cameras_supported(report.optimized.mean_ms / 1e3, w.cameras, w.fps);
  for (std::size_t i = 0; i < ref.values.size(); ++i) {
    report.max_abs_deviation =
        std::max(report.max_abs_deviation, static_cast<double>(std::fabs(ref.values[i] - opt.values[i])));
  }
  return report;
}

json bench_report_to_json(const BenchReport& r) {
  auto stats = [](const TimingStats& s) {
    return json{{"mean_ms", s.mean_ms}, {"min_ms", s.min_ms}, {"max_ms", s.max_ms}};
  };
  json j{{"schema_version", 1},
         {"workload", bench_workload_to_json(r.workload)},
         {"mode", r.mode == PrecisionMode::Full ? "full" : "half"},
         {"workers", r.workers},
         {"host", r.host},
         {"timer_resolution_ns", r.timer_resolution_ns},
         {"measured", r.measured}};
  if (!r.measured) return j;
  j["input_checksum"] = r.input_checksum;
  j["reference"] = stats(r.reference);
  j["optimized"] = stats(r.optimized);
  j["speedup"] = r.speedup;
  j["fps"] = r.workload.fps;
  j["cameras_supported"] = {{"reference", r.cameras_supported_reference},
                            {"optimized", r.cameras_supported_optimized}};
  j["max_abs_deviation"] = r.max_abs_deviation;
  return j;
}

}  // namespace occtrack
