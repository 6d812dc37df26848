#include "occtrack/records.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

#include "occtrack/error.hpp"
#include "occtrack/json_io.hpp"

namespace occtrack {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename F>
void for_each_line(const std::string& text, const std::string& source, F&& fn) {
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    fn(parse_json_text(line, source + " record " + std::to_string(line_no)),
       source + ":" + std::to_string(line_no));
  }
}

json visibility_to_json(const VisibilityScore& v) {
  return json{{"camera_id", v.camera_id}, {"object_id", v.object_id}, {"value", v.value},
              {"behind_camera", v.behind_camera}};
}

VisibilityScore visibility_from_json(const json& j, const std::string& context) {
  StrictObject o(j, context);
  VisibilityScore v;
  v.camera_id = o.get<int>("camera_id");
  v.object_id = o.get_or("object_id", 0);
  v.value = o.get<double>("value");
  v.behind_camera = o.get_or("behind_camera", false);
  o.finish();
  return v;
}

json embedding_to_json(const Embedding& e) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < e.dim(); ++i) arr.push_back(e.values()[i]);
  return arr;
}

// Little-endian byte writer/reader for the pyramid container.
class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    out_.append(reinterpret_cast<const char*>(raw), sizeof(T));
  }
  void put_raw(const char* data, std::size_t n) { out_.append(data, n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  ByteReader(const std::string& bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }
  void get_raw(char* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool at_end() const noexcept { return pos_ == bytes_.size(); }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorKind::Io, source_ + ": truncated pyramid container at byte " + std::to_string(pos_));
    }
  }
  const std::string& bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string trajectories_to_ndjson(const TrajectorySet& set) {
  std::string out;
  for (std::size_t f = 0; f < set.frames.size(); ++f) {
    for (const TrackRecord& r : set.frames[f]) {
      const ObjectState3D& s = r.state;
      json line{{"frame", f},           {"track_id", r.track_id}, {"x", s.center().x()},
                {"y", s.center().y()},  {"z", s.center().z()},    {"w", s.w()},
                {"l", s.l()},           {"h", s.h()},             {"yaw", s.yaw()},
                {"confidence", r.confidence}};
      out += line.dump();
      out += '\n';
    }
  }
  return out;
}

TrajectorySet trajectories_from_ndjson(const std::string& text, const std::string& source,
                                       std::size_t min_frames) {
  TrajectorySet set;
  set.frames.resize(min_frames);
  for_each_line(text, source, [&](const json& j, const std::string& where) {
    StrictObject o(j, where);
    const auto frame = o.get<std::size_t>("frame");
    TrackRecord r;
    r.track_id = o.get<std::int64_t>("track_id");
    const Vec3 c(o.get<double>("x"), o.get<double>("y"), o.get<double>("z"));
    const double w = o.get<double>("w"), l = o.get<double>("l"), h = o.get<double>("h");
    const double yaw = o.get_or("yaw", 0.0);
    r.confidence = o.get_or("confidence", 1.0);
    o.finish();
    try {
      r.state = ObjectState3D(c, w, l, h, yaw);
    } catch (const Error& e) {
      throw Error(ErrorKind::ConfigParseError, where + ": " + e.what());
    }
    if (frame >= set.frames.size()) set.frames.resize(frame + 1);
    set.frames[frame].push_back(std::move(r));
  });
  try {
    set.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigParseError, source + ": " + e.what());
  }
  return set;
}

std::string detections_to_ndjson(std::span<const DetectionFrame> frames) {
  std::string out;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    json dets = json::array();
    for (const Detection& d : frames[f].detections) {
      json j = state_to_json(d.state);
      j["confidence"] = d.confidence;
      j["embedding_valid"] = d.embedding_valid;
      j["embedding"] = embedding_to_json(d.embedding);
      json vis = json::array();
      for (const auto& v : d.per_camera_visibility) vis.push_back(visibility_to_json(v));
      j["visibility"] = std::move(vis);
      dets.push_back(std::move(j));
    }
    out += json{{"frame", f}, {"time", frames[f].time}, {"detections", std::move(dets)}}.dump();
    out += '\n';
  }
  return out;
}

std::vector<DetectionFrame> detections_from_ndjson(const std::string& text, const std::string& source) {
  std::vector<DetectionFrame> frames;
  for_each_line(text, source, [&](const json& j, const std::string& where) {
    StrictObject o(j, where);
    const auto frame = o.get<std::size_t>("frame");
    if (frame != frames.size()) {
      throw Error(ErrorKind::ConfigParseError,
                  where + ": expected frame " + std::to_string(frames.size()) + ", got " + std::to_string(frame));
    }
    DetectionFrame df;
    df.time = o.get<double>("time");
    const json& dets = o.at("detections");
    if (!dets.is_array()) throw Error(ErrorKind::ConfigParseError, where + ".detections: expected an array");
    for (std::size_t i = 0; i < dets.size(); ++i) {
      const std::string ctx = where + ".detections[" + std::to_string(i) + "]";
      // split the state fields from the detection-only fields
      json state = dets[i];
      if (!state.is_object()) throw Error(ErrorKind::ConfigParseError, ctx + ": expected an object");
      json extra = json::object();
      for (const char* key : {"confidence", "embedding_valid", "embedding", "visibility"}) {
        if (state.contains(key)) {
          extra[key] = state[key];
          state.erase(key);
        }
      }
      Detection d;
      d.state = state_from_json(state, ctx);
      StrictObject e(extra, ctx);
      d.confidence = e.get_or("confidence", 1.0);
      d.embedding_valid = e.get_or("embedding_valid", true);
      const auto values = e.get_or<std::vector<double>>("embedding", {});
      if (!values.empty()) {
        try {
          const Eigen::Map<const VecX> raw(values.data(), static_cast<Eigen::Index>(values.size()));
          // Stored unit vectors load unchanged; anything else is normalized.
          d.embedding = std::abs(raw.norm() - 1.0) <= 1e-9 ? Embedding::from_unit(raw) : Embedding::normalized(raw);
        } catch (const Error& err) {
          throw Error(ErrorKind::ConfigParseError, ctx + ".embedding: " + err.what());
        }
      } else {
        d.embedding_valid = false;
      }
      if (e.has("visibility")) {
        const json& vis = e.at("visibility");
        if (!vis.is_array()) throw Error(ErrorKind::ConfigParseError, ctx + ".visibility: expected an array");
        for (std::size_t c = 0; c < vis.size(); ++c) {
          d.per_camera_visibility.push_back(visibility_from_json(vis[c], ctx + ".visibility[" + std::to_string(c) + "]"));
        }
      }
      e.finish();
      df.detections.push_back(std::move(d));
    }
    o.finish();
    frames.push_back(std::move(df));
  });
  return frames;
}

std::string truth_to_ndjson(std::span<const FrameTruth> frames) {
  std::string out;
  for (const FrameTruth& t : frames) {
    json objs = json::array();
    for (std::size_t k = 0; k < t.objects.size(); ++k) {
      json j = state_to_json(t.objects[k].state);
      j["identity"] = t.objects[k].identity;
      j["category"] = t.objects[k].category;
      json vis = json::array();
      for (const auto& per_cam : t.visibility) vis.push_back(visibility_to_json(per_cam[k]));
      j["visibility"] = std::move(vis);
      objs.push_back(std::move(j));
    }
    out += json{{"frame", t.index}, {"time", t.time}, {"objects", std::move(objs)}}.dump();
    out += '\n';
  }
  return out;
}

std::string encode_pyramids(std::span<const FeaturePyramid> pyramids) {
  ByteWriter w;
  w.put_raw(kPyramidMagic, sizeof kPyramidMagic);
  w.put<std::uint32_t>(kPyramidFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(pyramids.size()));
  for (const FeaturePyramid& p : pyramids) {
    w.put<std::int32_t>(p.camera_id());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p.channels()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p.num_levels()));
    for (const FeatureLevel& l : p.levels()) {
      w.put<std::uint32_t>(static_cast<std::uint32_t>(l.height));
      w.put<std::uint32_t>(static_cast<std::uint32_t>(l.width));
      w.put<double>(l.stride);
      if constexpr (std::endian::native == std::endian::little) {
        w.put_raw(reinterpret_cast<const char*>(l.values.data()), l.values.size() * sizeof(float));
      } else {
        for (float v : l.values) w.put<float>(v);
      }
    }
  }
  return w.take();
}

std::vector<FeaturePyramid> decode_pyramids(const std::string& bytes, const std::string& source) {
  ByteReader r(bytes, source);
  char magic[sizeof kPyramidMagic];
  r.get_raw(magic, sizeof magic);
  if (std::memcmp(magic, kPyramidMagic, sizeof magic) != 0) {
    throw Error(ErrorKind::Io, source + ": not a pyramid container");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kPyramidFormatVersion) {
    throw Error(ErrorKind::Io, source + ": unsupported pyramid container version " + std::to_string(version));
  }
  const auto cameras = r.get<std::uint32_t>();
  std::vector<FeaturePyramid> out;
  out.reserve(cameras);
  for (std::uint32_t c = 0; c < cameras; ++c) {
    const auto camera_id = r.get<std::int32_t>();
    const auto channels = r.get<std::uint32_t>();
    const auto level_count = r.get<std::uint32_t>();
    std::vector<FeatureLevel> levels(level_count);
    for (FeatureLevel& l : levels) {
      l.height = static_cast<int>(r.get<std::uint32_t>());
      l.width = static_cast<int>(r.get<std::uint32_t>());
      l.stride = r.get<double>();
      const std::size_t n = static_cast<std::size_t>(l.height) * static_cast<std::size_t>(l.width) * channels;
      if (n > r.remaining() / sizeof(float)) {
        throw Error(ErrorKind::Io, source + ": level larger than the remaining container");
      }
      l.values.resize(n);
      if constexpr (std::endian::native == std::endian::little) {
        r.get_raw(reinterpret_cast<char*>(l.values.data()), n * sizeof(float));
      } else {
        for (float& v : l.values) v = r.get<float>();
      }
    }
    out.emplace_back(camera_id, static_cast<int>(channels), std::move(levels));
  }
  if (!r.at_end()) throw Error(ErrorKind::Io, source + ": trailing bytes after pyramid container");
  return out;
}

}  // namespace occtrack
