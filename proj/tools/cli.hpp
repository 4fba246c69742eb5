#pragma once

#include <iosfwd>

namespace cvarcut::cli {

inline constexpr int kExitOptimal = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitTimeLimit = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitFailure = 4;  // IO, parse or solver failure

/// Entry point of the `cvarcut` tool; `out` receives the summary line or CSV
/// progress, diagnostics go through spdlog to stderr.
int run(int argc, const char* const* argv, std::ostream& out);

}  // namespace cvarcut::cli
