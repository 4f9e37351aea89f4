#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "enrollsim/errors.hpp"

namespace enrollsim::kv {

// Flat key = value file. '#' starts a comment, blank lines are skipped,
// whitespace around keys and values is trimmed. Duplicate keys are a
// ConfigError: silently keeping either one hides typos.
using Map = std::map<std::string, std::string, std::less<>>;

Map parse_stream(std::istream& in);
Map parse_file(const std::string& path);

}  // namespace enrollsim::kv
