#pragma once

#include <string>
#include <vector>

namespace enrollsim::cli {

// Full command-line entry point. Returns the process exit code:
// 0 success, 1 data or I/O failure, 2 usage or configuration error.
int run_cli(int argc, const char* const* argv);

// Convenience for tests: args without the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace enrollsim::cli
