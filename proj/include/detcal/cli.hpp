#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace detcal::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 1,
  kDataError = 2,
  kDegenerateFit = 3,
};

/// Runs one command line (without the program name). Tables go to `out`,
/// diagnostics to `err`; files are written where the flags say.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace detcal::cli
