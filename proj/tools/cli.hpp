#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace h2rbox::cli {

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kConfigError = 2,
  kNoSolution = 3,
  kDiverged = 4,
};

/// Runs one command line (args[0] is the program name). Reports go to
/// --out-dir, human-readable output to `out`, errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace h2rbox::cli
