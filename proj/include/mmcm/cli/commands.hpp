#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "mmcm/cli/output.hpp"

namespace mmcm::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kNumerical = 2 };

struct CommandResult {
  int exit_code = kOk;
  RunReport report;
};

/// Runs one subcommand. `args` excludes the program name, e.g.
/// {"figure", "3", "left", "--out", "results"}.
CommandResult run_command(const std::vector<std::string>& args, std::ostream& out,
                          std::ostream& err);

}  // namespace mmcm::cli
