#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace utamp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitAllDiverged = 2;

/// Entry point of the `utamp` harness; args excludes the program name.
/// Subcommands: gen, solve, certify, compare.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace utamp::cli
