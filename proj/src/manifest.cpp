#include "adalign/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "adalign/errors.hpp"
#include "json.hpp"

namespace adalign {

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("manifest: cannot open '" + path + "' for checksum");
  std::uint64_t hash = 14695981039346656037ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ULL;
    }
  }
  return hash;
}

std::string checksum_hex(std::uint64_t value) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string manifest_json(const RunManifest& m) {
  nlohmann::json j;
  j["command"] = m.command;
  j["config"] = m.config;
  j["seed"] = m.seed;
  j["inputs"] = m.inputs;
  j["out_dir"] = m.out_dir;
  j["artifacts"] = m.artifacts;
  return j.dump(2) + "\n";
}

void save_manifest(const std::string& path, const RunManifest& m) {
  std::ofstream out(path);
  if (!out) throw FormatError("manifest: cannot open '" + path + "' for writing");
  out << manifest_json(m);
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("manifest: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw FormatError("manifest: invalid json in '" + path + "': " + e.what());
  }
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.config = j.at("config").get<KvMap>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.inputs = j.at("inputs").get<KvMap>();
    m.out_dir = j.at("out_dir").get<std::string>();
    m.artifacts = j.at("artifacts").get<KvMap>();
  } catch (const std::exception& e) {
    throw FormatError("manifest: missing field in '" + path + "': " + e.what());
  }
  return m;
}

}  // namespace adalign
