#pragma once

#include <string>
#include <vector>

namespace oodgate::cli {

/// Stable exit statuses for scripting.
enum ExitStatus : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitIo = 3,
  kExitNumerical = 4,
};

/// Runs one invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

/// Top-level `--help` text.
std::string help_text();

}  // namespace oodgate::cli
