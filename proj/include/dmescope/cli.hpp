#pragma once

#include <iosfwd>

namespace dmescope {

inline constexpr int kExitClean = 0;
inline constexpr int kExitBugs = 1;
inline constexpr int kExitError = 2;

/// Entry point of the `dmescope` tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dmescope
