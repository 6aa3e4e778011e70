#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace branchou::cli {

// Exit codes of the command-line tool.
enum ExitCode : int {
  kPass = 0,
  kVerificationFailed = 1,
  kUsage = 2,
  kDomain = 3,
  kResource = 4,
};

// Runs the tool on `args` (without the program name) and returns the exit code.
// Errors are reported on `err`; nothing is thrown.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Names accepted by `verify`.
std::vector<std::string> preset_names();

// Directory for reports and CSV output when --out is absent.
inline constexpr const char* kOutputDirEnv = "BRANCHOU_OUTPUT_DIR";

}  // namespace branchou::cli
