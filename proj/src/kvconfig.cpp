#include "enrollsim/kvconfig.hpp"

#include <fstream>
#include <sstream>

#include "enrollsim/textio.hpp"

namespace enrollsim::kv {

Map parse_stream(std::istream& in) {
  Map out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = text::trim(s);
    if (s.empty()) continue;
    auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key(text::trim(s.substr(0, eq)));
    std::string value(text::trim(s.substr(eq + 1)));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (!out.emplace(std::move(key), std::move(value)).second)
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" +
                        std::string(text::trim(s.substr(0, eq))) + "'");
  }
  return out;
}

Map parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_stream(in);
}

}  // namespace enrollsim::kv
