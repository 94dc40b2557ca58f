#pragma once

// Subcommand driver behind the ssd_lab executable.
//
// Exit codes: 0 success, 1 usage or validation error (nothing is computed or
// written), 2 failure during computation or output.

#include <iosfwd>
#include <string>
#include <vector>

namespace ssd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitCompute = 2;

/// `args` excludes the program name. Reports go to `out` when --output is "-".
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace ssd::cli
