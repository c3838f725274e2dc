#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace oodgate::cli {

/// Flat `key = value` pairs; `#` starts a comment line.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);

/// Expands `--config FILE` into `--key value` arguments for every key that is
/// not already given on the command line. `true`/`false` values become a bare
/// flag or nothing. Returns the expanded argument list (program name
/// excluded).
std::vector<std::string> expand_config(std::vector<std::string> args);

}  // namespace oodgate::cli
