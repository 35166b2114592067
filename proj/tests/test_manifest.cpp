#include <cstdio>
#include <fstream>
#include <string>

#include "adalign/errors.hpp"
#include "adalign/manifest.hpp"
#include "doctest.h"

using namespace adalign;

namespace {

std::string write_temp(const char* name, const std::string& bytes) {
  const std::string path = std::string("/tmp/adalign_manifest_test_") + name;
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  return path;
}

RunManifest sample_manifest() {
  RunManifest m;
  m.command = "train";
  m.config = {{"lambda", "1"}, {"epochs", "150"}};
  m.seed = 17;
  m.inputs = {{"source_features", "data/source_features.txt"}};
  m.out_dir = "runs/a";
  m.artifacts = {{"metrics.log", "00000000deadbeef"}};
  return m;
}

}  // namespace

TEST_SUITE("manifest") {

TEST_CASE("file checksum matches known fnv1a values") {
  const std::string empty = write_temp("empty.bin", "");
  const std::string abc = write_temp("abc.bin", "abc");
  CHECK(fnv1a64_file(empty) == 14695981039346656037ULL);
  CHECK(checksum_hex(fnv1a64_file(empty)) == "cbf29ce484222325");
  CHECK(checksum_hex(fnv1a64_file(abc)) == "e71fa2190541574b");
  std::remove(empty.c_str());
  std::remove(abc.c_str());
  CHECK_THROWS_AS(fnv1a64_file(abc), FormatError);
}

TEST_CASE("checksum is sensitive to single-byte edits") {
  const std::string a = write_temp("payload_a.bin", std::string(1000, 'x'));
  std::string flipped(1000, 'x');
  flipped[500] = 'y';
  const std::string b = write_temp("payload_b.bin", flipped);
  const std::string c = write_temp("payload_c.bin", std::string(1000, 'x'));
  CHECK(fnv1a64_file(a) != fnv1a64_file(b));
  CHECK(fnv1a64_file(a) == fnv1a64_file(c));
  std::remove(a.c_str());
  std::remove(b.c_str());
  std::remove(c.c_str());
}

TEST_CASE("json rendering is deterministic with sorted keys") {
  const RunManifest m = sample_manifest();
  const std::string text = manifest_json(m);
  CHECK(text == manifest_json(sample_manifest()));
  CHECK(text.back() == '\n');
  CHECK(text.find("\"command\"") != std::string::npos);
  CHECK(text.find("\"artifacts\"") < text.find("\"command\""));
  CHECK(text.find("\"epochs\"") < text.find("\"lambda\""));
  CHECK(text.find("timestamp") == std::string::npos);
}

TEST_CASE("manifest save and load round trip") {
  const std::string path = "/tmp/adalign_manifest_test_roundtrip.json";
  const RunManifest m = sample_manifest();
  save_manifest(path, m);
  const RunManifest got = load_manifest(path);
  CHECK(got.command == m.command);
  CHECK(got.config == m.config);
  CHECK(got.seed == m.seed);
  CHECK(got.inputs == m.inputs);
  CHECK(got.out_dir == m.out_dir);
  CHECK(got.artifacts == m.artifacts);
  std::remove(path.c_str());
}

TEST_CASE("malformed manifests are rejected") {
  CHECK_THROWS_AS(load_manifest("/tmp/adalign_manifest_test_missing.json"),
                  FormatError);
  const std::string bad = write_temp("bad.json", "{ not json");
  CHECK_THROWS_AS(load_manifest(bad), FormatError);
  std::remove(bad.c_str());
  const std::string partial = write_temp("partial.json", "{\"command\": \"train\"}\n");
  CHECK_THROWS_AS(load_manifest(partial), FormatError);
  std::remove(partial.c_str());
}

}
