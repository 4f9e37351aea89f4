#include "enrollsim/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "enrollsim/rng.hpp"

namespace enrollsim::manifest {

const char* const kToolName = "enrollsim";
const char* const kToolVersion = "0.1.0";

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["subcommand"] = subcommand;
  j["seed"] = seed;
  j["config"] = config;
  nlohmann::json ins = nlohmann::json::array();
  for (const auto& [path, digest] : inputs)
    ins.push_back({{"path", path}, {"digest_fnv1a64", digest}});
  j["inputs"] = ins;
  j["outputs"] = outputs;
  return j;
}

void RunManifest::write(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write manifest: " + tmp);
    out << to_json().dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing manifest: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("cannot move manifest into place: " + path);
  }
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read for digest: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (got < static_cast<std::streamsize>(sizeof buf)) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

}  // namespace enrollsim::manifest
