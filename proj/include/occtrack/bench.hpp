#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "occtrack/feature.hpp"
#include "occtrack/json_io.hpp"

namespace occtrack {

struct BenchWorkload {
  int cameras = 6;
  int levels = 4;
  int channels = 256;
  int queries = 900;
  int points_per_query = 13;
  int repetitions = 3;
  int base_height = 32;
  int base_width = 88;
  double fps = 30.0;
  std::uint64_t seed = 42;
};

BenchWorkload bench_workload_from_json(const json& doc);
json bench_workload_to_json(const BenchWorkload& w);

struct TimingStats {
  double mean_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
};

struct BenchReport {
  BenchWorkload workload;
  PrecisionMode mode = PrecisionMode::Full;
  unsigned workers = 1;
  std::string host;
  double timer_resolution_ns = 0.0;
  std::string input_checksum;
  bool measured = false;
  TimingStats reference;
  TimingStats optimized;
  double speedup = 0.0;
  std::int64_t cameras_supported_reference = 0;
  std::int64_t cameras_supported_optimized = 0;
  double max_abs_deviation = 0.0;
};

/// Seeded synthetic pyramids and sample plan for a workload.
struct BenchInputs {
  std::vector<FeaturePyramid> pyramids;
  SamplePlan plan;
  std::string checksum;
};
BenchInputs make_bench_inputs(const BenchWorkload& w);

std::string host_description();

/// floor(1 / (fps * seconds_per_camera)).
std::int64_t cameras_supported(double seconds_per_invocation, int cameras, double fps);

BenchReport bench_msda(const BenchWorkload& w, PrecisionMode mode = PrecisionMode::Full,
                       unsigned workers = 1);

json bench_report_to_json(const BenchReport& r);

}  // namespace occtrack
