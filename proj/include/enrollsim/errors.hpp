#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace enrollsim {

// Malformed input data (enrollment CSV, sweep CSV, ...). Carries the
// 1-based line number of the offending row.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Bad configuration: unknown key, unparsable value, inconsistent settings.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace enrollsim
