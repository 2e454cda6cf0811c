#include <iostream>

#include "mmcm/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mmcm::cli::run_command(args, std::cout, std::cerr).exit_code;
}
