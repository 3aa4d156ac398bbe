#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mta {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;  // `verify` found a failing instance
inline constexpr int kExitUsage = 2;        // bad flags or hyperparameters
inline constexpr int kExitFormat = 3;       // unreadable or malformed bundle

/// Entry point of the `mta` tool. `args` excludes the program name.
/// Records go to `out` (or --output), diagnostics and tables to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mta
