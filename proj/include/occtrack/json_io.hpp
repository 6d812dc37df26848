#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "occtrack/error.hpp"
#include "occtrack/geometry.hpp"

namespace occtrack {

using json = nlohmann::json;

/// Parses JSON text; syntax errors become Error(ConfigParseError) carrying the
/// 1-based line and column of the failure.
json parse_json_text(const std::string& text, const std::string& source_name);

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::string& bytes);

/// 64-bit FNV-1a over raw bytes, rendered as 16 lowercase hex digits.
std::string checksum_hex(const std::string& bytes);
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Fail-closed field reader for config objects: every key must be consumed
/// before finish(), otherwise the unknown key is reported.
class StrictObject {
 public:
  StrictObject(const json& object, std::string context);

  bool has(const std::string& key) const { return obj_.contains(key); }
  const json& at(const std::string& key);

  template <typename T>
  T get(const std::string& key) {
    const json& v = at(key);
    try {
      return v.get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ConfigParseError,
                  context_ + "." + key + ": wrong type (" + e.what() + ")");
    }
  }

  template <typename T>
  T get_or(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return get<T>(key);
  }

  void finish() const;
  const std::string& context() const noexcept { return context_; }

 private:
  const json& obj_;
  std::string context_;
  std::set<std::string> used_;
};

CameraModel camera_from_json(const json& j, const std::string& context);
json camera_to_json(const CameraModel& cam);
std::vector<CameraModel> load_camera_network(const json& doc);

json state_to_json(const ObjectState3D& s);
ObjectState3D state_from_json(const json& j, const std::string& context);

}  // namespace occtrack
