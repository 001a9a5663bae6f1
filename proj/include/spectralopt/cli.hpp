#pragma once

namespace spectralopt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitUsage = 2;

// Full command-line entry point: verify, lr-sweep, converge, spectrum.
// Returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace spectralopt::cli
