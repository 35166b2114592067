#pragma once

#include <cstdint>
#include <string>

#include "adalign/config.hpp"

namespace adalign {

// FNV-1a over the file bytes; cheap integrity stamp, not cryptographic.
std::uint64_t fnv1a64_file(const std::string& path);  // FormatError
std::string checksum_hex(std::uint64_t value);

struct RunManifest {
  std::string command;
  KvMap config;     // fully resolved, defaults materialized
  std::uint64_t seed = 0;
  KvMap inputs;     // label -> path
  std::string out_dir;
  KvMap artifacts;  // filename -> checksum
};

// Deterministic rendering: sorted keys, no timestamps.
std::string manifest_json(const RunManifest& manifest);
void save_manifest(const std::string& path, const RunManifest& manifest);
RunManifest load_manifest(const std::string& path);  // FormatError

}  // namespace adalign
