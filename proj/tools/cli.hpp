#pragma once

#include <string>
#include <vector>

namespace graphlim::cli {

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kSolverAbort = 2,
  kChecksFailed = 3,  ///< validate: an assumption check failed
};

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args);

}  // namespace graphlim::cli
