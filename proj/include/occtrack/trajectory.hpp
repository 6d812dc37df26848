#pragma once

#include <cstdint>
#include <vector>

#include "occtrack/geometry.hpp"

namespace occtrack {

struct TrackRecord {
  std::int64_t track_id = 0;
  ObjectState3D state;
  double confidence = 1.0;
};

/// Per-frame identified boxes; used for both ground truth and predictions.
struct TrajectorySet {
  std::vector<std::vector<TrackRecord>> frames;

  std::size_t num_frames() const noexcept { return frames.size(); }
  /// Throws InvalidArgument when a frame repeats a track_id.
  void validate() const;
};

}  // namespace occtrack
