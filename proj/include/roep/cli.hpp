#pragma once

#include <iosfwd>

namespace roep::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitVerification = 2;
inline constexpr int kExitDivergence = 3;

/// Parses the command line and runs one command. Results go to `out`,
/// diagnostics to `err`. Returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace roep::cli
