#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ulsa::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIo = 3,
  kNumeric = 4,
  kQualification = 5,
};

/// Runs the ulsa tool. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ulsa::cli
