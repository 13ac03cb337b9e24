#include <iostream>
#include <string>
#include <vector>

#include "mmx/cli/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return mmx::cli::run_command(args, std::cout, std::cerr);
}
