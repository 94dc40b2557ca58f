#pragma once

// Flat key = value configuration files. Lines starting with '#' are comments.
// Keys use the long flag names with '_' or '-' interchangeably (top_p == top-p).

#include <map>
#include <string>
#include <vector>

namespace ssd::cli {

using ConfigMap = std::map<std::string, std::string>;

/// Throws FileNotFound or ParseError (with line number).
ConfigMap read_config(const std::string& path);
ConfigMap parse_config(const std::string& text);

/// "--key=value" tokens in key order.
std::vector<std::string> config_flags(const ConfigMap& config);

/// Pulls a `--config PATH` / `--config=PATH` out of `args` and splices the file's
/// entries in right after the subcommand, so explicit flags later on win.
/// `args` excludes the program name; args[0] is the subcommand.
std::vector<std::string> expand_config(std::vector<std::string> args);

}  // namespace ssd::cli
