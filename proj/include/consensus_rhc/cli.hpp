#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crhc::cli {

enum ExitCode : int {
  kOk = 0,
  kRuntimeFailure = 1,
  kConditionViolated = 2,
  kInfeasible = 3,
};

// Runs the consensus-rhc command line; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crhc::cli
