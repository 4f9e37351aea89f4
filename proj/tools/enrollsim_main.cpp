#include "enrollsim/cli.hpp"

int main(int argc, char** argv) { return enrollsim::cli::run_cli(argc, argv); }
