#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "occtrack/error.hpp"
#include "occtrack/json_io.hpp"
#include "occtrack/records.hpp"

using namespace occtrack;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("trajectory records round trip exactly") {
  std::mt19937_64 rng(149);
  std::normal_distribution<double> n(0, 3);
  TrajectorySet t;
  t.frames.resize(6);
  for (std::size_t f = 0; f < 5; ++f)
    for (int k = 0; k < 3; ++k)
      t.frames[f].push_back({k * 7 + 1, ObjectState3D(Vec3(n(rng), n(rng), n(rng)), 0.5, 0.7, 1.1, n(rng)), 0.25 * k});
  const std::string text = trajectories_to_ndjson(t);
  const TrajectorySet back = trajectories_from_ndjson(text, "t.ndjson", 6);
  REQUIRE(back.num_frames() == 6);
  CHECK(back.frames[5].empty());
  CHECK(trajectories_to_ndjson(back) == text);
  CHECK(back.frames[2][1].state.center() == t.frames[2][1].state.center());
  CHECK(trajectories_from_ndjson(text, "t.ndjson").num_frames() == 5);
}

TEST_CASE("malformed trajectory lines name their position") {
  const std::string text =
      "{\"frame\":0,\"track_id\":1,\"x\":0,\"y\":0,\"z\":0,\"w\":1,\"l\":1,\"h\":1,\"yaw\":0,\"confidence\":1}\n"
      "{\"frame\":1,\"track_id\":1,\"x\":0,\n";
  try {
    trajectories_from_ndjson(text, "bad.ndjson");
    FAIL("expected ConfigParseError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigParseError);
    CHECK(std::string(e.what()).find("bad.ndjson record 2") != std::string::npos);
  }
  const std::string extra =
      "{\"frame\":0,\"track_id\":1,\"x\":0,\"y\":0,\"z\":0,\"w\":1,\"l\":1,\"h\":1,\"yaw\":0,\"confidence\":1,\"q\":2}\n";
  CHECK(kind_of([&] { trajectories_from_ndjson(extra, "x"); }) == ErrorKind::ConfigParseError);
  const std::string bad_dims =
      "{\"frame\":0,\"track_id\":1,\"x\":0,\"y\":0,\"z\":0,\"w\":-1,\"l\":1,\"h\":1,\"yaw\":0,\"confidence\":1}\n";
  CHECK(kind_of([&] { trajectories_from_ndjson(bad_dims, "x"); }) == ErrorKind::ConfigParseError);
}

TEST_CASE("json parse errors carry line and column") {
  try {
    parse_json_text("{\n  \"a\": 1,\n  \"b\": ]\n}", "cfg.json");
    FAIL("expected ConfigParseError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigParseError);
    CHECK(std::string(e.what()).find("cfg.json:3:") != std::string::npos);
  }
}

TEST_CASE("detection frames round trip") {
  SceneConfig cfg = fixture::basic_scene();
  cfg.noise.sigma_center = 0.1;
  cfg.noise.sigma_embedding = 0.2;
  cfg.objects.push_back(fixture::walker(3, {{0.0, Vec3(0, -1, 0.85)}, {2.0, Vec3(0, 1, 0.85)}}));
  cfg.objects.push_back(fixture::walker(4, {{0.0, Vec3(2, 0, 0.85)}}));
  const Simulation sim = simulate(cfg);
  std::vector<DetectionFrame> frames;
  for (const auto& t : sim.frames) frames.push_back({t.time, detections_from_truth(cfg, t)});
  frames[2].detections[0].embedding_valid = false;
  frames[2].detections[0].embedding = Embedding();
  frames[4].detections.clear();
  const std::string text = detections_to_ndjson(frames);
  const auto back = detections_from_ndjson(text, "d.ndjson");
  REQUIRE(back.size() == frames.size());
  CHECK(detections_to_ndjson(back) == text);
  CHECK_FALSE(back[2].detections[0].embedding_valid);
  CHECK(back[4].detections.empty());
  CHECK(back[7].detections[1].embedding.values() == frames[7].detections[1].embedding.values());
  CHECK(back[7].detections[1].per_camera_visibility.size() == 1);

  // frames out of sequence are rejected
  const auto nl = text.find('\n');
  const std::string skipped = text.substr(nl + 1);
  CHECK(kind_of([&] { detections_from_ndjson(skipped, "d.ndjson"); }) == ErrorKind::ConfigParseError);
}

TEST_CASE("truth records list every object") {
  SceneConfig cfg = fixture::basic_scene();
  cfg.objects.push_back(fixture::walker(3, {{0.0, Vec3(0, 0, 0.85)}}));
  const Simulation sim = simulate(cfg);
  const std::string text = truth_to_ndjson(sim.frames);
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(sim.frames.size()));
  const json first = json::parse(text.substr(0, text.find('\n')));
  CHECK(first.at("objects").at(0).at("identity") == 3);
  CHECK(first.at("objects").at(0).at("visibility").size() == 1);
}

TEST_CASE("pyramid container round trip and corruption") {
  std::mt19937_64 rng(151);
  const std::vector<FeaturePyramid> pyrs{fixture::random_pyramid(rng, 2, 4, 3, 12, 20),
                                         fixture::random_pyramid(rng, -1, 6, 1, 5, 7)};
  const std::string bytes = encode_pyramids(pyrs);
  CHECK(bytes.compare(0, 8, std::string(kPyramidMagic, 8)) == 0);
  const auto back = decode_pyramids(bytes, "p.bin");
  REQUIRE(back.size() == 2);
  CHECK(back[1].camera_id() == -1);
  CHECK(back[1].channels() == 6);
  for (std::size_t i = 0; i < 2; ++i) {
    REQUIRE(back[i].num_levels() == pyrs[i].num_levels());
    for (std::size_t l = 0; l < pyrs[i].num_levels(); ++l) {
      CHECK(back[i].level(l).values == pyrs[i].level(l).values);
      CHECK(back[i].level(l).stride == pyrs[i].level(l).stride);
    }
  }
  CHECK(encode_pyramids(back) == bytes);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(kind_of([&] { decode_pyramids(bad_magic, "p.bin"); }) == ErrorKind::Io);
  std::string bad_version = bytes;
  bad_version[8] = 9;
  CHECK(kind_of([&] { decode_pyramids(bad_version, "p.bin"); }) == ErrorKind::Io);
  CHECK(kind_of([&] { decode_pyramids(bytes.substr(0, bytes.size() - 3), "p.bin"); }) == ErrorKind::Io);
  CHECK(kind_of([&] { decode_pyramids(bytes + "x", "p.bin"); }) == ErrorKind::Io);
}

TEST_CASE("checksums") {
  CHECK(checksum_hex("") == "cbf29ce484222325");
  CHECK(checksum_hex("a") == "af63dc4c8601ec8c");
  CHECK(checksum_hex("a") != checksum_hex("b"));
}
