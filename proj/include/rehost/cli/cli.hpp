#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rehost::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFindings = 1,  // fuzz found crashes, or `run` crashed
  kExitUsage = 2,     // bad flags, unreadable or malformed input
  kExitInternal = 3,
};

// Runs one command line (without the program name). Everything the command
// prints goes to `out` / `err`, so tests can drive it in-process.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rehost::cli
