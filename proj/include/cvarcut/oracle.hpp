#pragma once

// Ground truth by exhaustive enumeration of supports (testing only).

#include "cvarcut/driver.hpp"

#include <optional>

namespace cvarcut {

struct OracleResult {
  Selection best_z;
  double best_f = 0.0;
  long evaluated = 0;  // supports solved
};

/// Largest number of supports brute_force agrees to solve.
inline constexpr double kOracleBudget = 1e6;

/// Minimum of the exact lower-level value over supports of size exactly k
/// (or at most k when `exactly_k` is false); ties go to the lexicographically
/// smallest selection. Returns nullopt when every support is infeasible and
/// throws ParameterError when the support count exceeds kOracleBudget.
std::optional<OracleResult> brute_force(const Instance& instance, int k, bool exactly_k = true);

/// brute_force at instance.k packaged as a SolveReport.
SolveReport solve_oracle(const Instance& instance);

}  // namespace cvarcut
