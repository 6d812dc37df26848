#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "occtrack/feature.hpp"
#include "occtrack/simulator.hpp"
#include "occtrack/tracker.hpp"
#include "occtrack/trajectory.hpp"

namespace occtrack {

// Newline-delimited JSON. Every writer emits one compact object per line in a
// fixed key order, so identical inputs give identical bytes.

/// One record per box: frame, track_id, x, y, z, w, l, h, yaw, confidence.
std::string trajectories_to_ndjson(const TrajectorySet& set);
/// Frames with no records are only representable through `min_frames`; the
/// result has max(min_frames, last frame + 1) frames.
TrajectorySet trajectories_from_ndjson(const std::string& text, const std::string& source,
                                       std::size_t min_frames = 0);

/// One line per frame: {frame, time, detections: [...]}.
std::string detections_to_ndjson(std::span<const DetectionFrame> frames);
std::vector<DetectionFrame> detections_from_ndjson(const std::string& text, const std::string& source);

/// One line per frame with every object's state and per-camera visibility.
std::string truth_to_ndjson(std::span<const FrameTruth> frames);

// Pyramid container, all integers and floats little-endian:
//   char[8] magic "OCCPYR\0\1", u32 version (1), u32 camera_count
//   per camera: i32 camera_id, u32 channels, u32 level_count
//     per level: u32 height, u32 width, f64 stride, f32 values[height*width*channels]
inline constexpr char kPyramidMagic[8] = {'O', 'C', 'C', 'P', 'Y', 'R', '\0', '\1'};
inline constexpr std::uint32_t kPyramidFormatVersion = 1;

std::string encode_pyramids(std::span<const FeaturePyramid> pyramids);
std::vector<FeaturePyramid> decode_pyramids(const std::string& bytes, const std::string& source);

}  // namespace occtrack
