#include "occtrack/json_io.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace occtrack {

json parse_json_text(const std::string& text, const std::string& source_name) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // byte is 1-based and points one past the offending character.
    const std::size_t offset = e.byte == 0 ? 0 : std::min<std::size_t>(e.byte - 1, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorKind::ConfigParseError, source_name + ":" + std::to_string(line) + ":" +
                                                 std::to_string(col) + ": malformed JSON");
  }
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string checksum_hex(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
  return buf;
}

StrictObject::StrictObject(const json& object, std::string context)
    : obj_(object), context_(std::move(context)) {
  if (!obj_.is_object()) {
    throw Error(ErrorKind::ConfigParseError, context_ + ": expected a JSON object");
  }
}

const json& StrictObject::at(const std::string& key) {
  auto it = obj_.find(key);
  if (it == obj_.end()) {
    throw Error(ErrorKind::ConfigParseError, context_ + ": missing required field '" + key + "'");
  }
  used_.insert(key);
  return *it;
}

void StrictObject::finish() const {
  for (auto it = obj_.begin(); it != obj_.end(); ++it) {
    if (!used_.contains(it.key())) {
      throw Error(ErrorKind::ConfigParseError, context_ + ": unknown field '" + it.key() + "'");
    }
  }
}

CameraModel camera_from_json(const json& j, const std::string& context) {
  StrictObject o(j, context);
  const int id = o.get<int>("id");
  const auto k = o.get<std::array<double, 4>>("K");
  const auto r = o.get<std::array<double, 9>>("R");
  const auto t = o.get<std::array<double, 3>>("t");
  const int width = o.get<int>("width");
  const int height = o.get<int>("height");
  o.finish();
  Mat3 rot;
  rot << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
  try {
    return CameraModel(id, k[0], k[1], k[2], k[3], rot, Vec3(t[0], t[1], t[2]), width, height);
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigParseError, context + ": " + e.what());
  }
}

json camera_to_json(const CameraModel& cam) {
  const Mat3& r = cam.rotation();
  return json{{"id", cam.id()},
              {"K", {cam.focal_x(), cam.focal_y(), cam.principal_x(), cam.principal_y()}},
              {"R", {r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2), r(2, 0), r(2, 1), r(2, 2)}},
              {"t", {cam.translation().x(), cam.translation().y(), cam.translation().z()}},
              {"width", cam.image_width()},
              {"height", cam.image_height()}};
}

std::vector<CameraModel> load_camera_network(const json& doc) {
  if (!doc.is_array()) throw Error(ErrorKind::ConfigParseError, "cameras: expected an array");
  std::vector<CameraModel> cams;
  std::set<int> ids;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    cams.push_back(camera_from_json(doc[i], "cameras[" + std::to_string(i) + "]"));
    if (!ids.insert(cams.back().id()).second) {
      throw Error(ErrorKind::ConfigParseError, "cameras: duplicate camera id " +
                                                   std::to_string(cams.back().id()));
    }
  }
  return cams;
}

json state_to_json(const ObjectState3D& s) {
  const auto a = s.to_array();
  return json{{"x", a[0]}, {"y", a[1]}, {"z", a[2]}, {"w", a[3]}, {"l", a[4]},
              {"h", a[5]}, {"yaw", a[6]}, {"vx", a[7]}, {"vy", a[8]}, {"vz", a[9]}};
}

ObjectState3D state_from_json(const json& j, const std::string& context) {
  StrictObject o(j, context);
  std::array<double, 10> a{};
  a[0] = o.get<double>("x");
  a[1] = o.get<double>("y");
  a[2] = o.get<double>("z");
  a[3] = o.get<double>("w");
  a[4] = o.get<double>("l");
  a[5] = o.get<double>("h");
  a[6] = o.get_or<double>("yaw", 0.0);
  a[7] = o.get_or<double>("vx", 0.0);
  a[8] = o.get_or<double>("vy", 0.0);
  a[9] = o.get_or<double>("vz", 0.0);
  o.finish();
  try {
    return ObjectState3D::from_array(a);
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigParseError, context + ": " + e.what());
  }
}

}  // namespace occtrack
