#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace enrollsim::manifest {

// Sidecar JSON describing one tool invocation: resolved configuration,
// input digests, output names. Input files plus this record are enough to
// reproduce the outputs byte for byte. Deliberately no timestamps or host
// details, so reruns produce identical manifests too.
struct RunManifest {
  std::string subcommand;
  std::uint64_t seed = 0;
  nlohmann::json config;  // resolved settings, defaults included
  std::vector<std::pair<std::string, std::string>> inputs;  // (path, digest)
  std::vector<std::string> outputs;

  nlohmann::json to_json() const;
  // Writes via a temp file and rename, so readers never see a half-written
  // manifest.
  void write(const std::string& path) const;
};

// FNV-1a 64 of the file bytes, as 16 hex digits. Throws std::runtime_error
// if the file cannot be read.
std::string file_digest(const std::string& path);

extern const char* const kToolName;
extern const char* const kToolVersion;

}  // namespace enrollsim::manifest
