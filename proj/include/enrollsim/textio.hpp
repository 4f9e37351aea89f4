#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace enrollsim::text {

// Shortest decimal string that round-trips back to the same double.
// Keeps CSV output stable across platforms.
std::string fmt_double(double v);

// Strict numeric parsers: the whole token must be consumed.
std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);
std::optional<std::uint64_t> parse_uint(std::string_view s);

// Splits on sep, keeping empty fields. "a,,b" -> {"a", "", "b"}.
std::vector<std::string_view> split(std::string_view s, char sep);

std::string_view trim(std::string_view s);

}  // namespace enrollsim::text
