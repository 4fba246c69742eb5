#pragma once

#include <Eigen/Dense>

#include <limits>

namespace cvarcut::numeric {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// min c^T x  s.t.  row_lo <= R x <= row_hi,  col_lo <= x <= col_hi.
///
/// Infinite bounds are allowed. Solved by a dense bounded dual simplex started
/// from the all-slack basis, which requires that basis to be dual feasible:
/// every column with cost > 0 needs a finite lower bound, every column with
/// cost < 0 a finite upper bound.
struct LinearProgram {
  Vector cost;
  Matrix rows;
  Vector row_lo;
  Vector row_hi;
  Vector col_lo;
  Vector col_hi;
};

enum class LpStatus { Optimal, Infeasible, IterLimit };

struct LpSolution {
  LpStatus status = LpStatus::IterLimit;
  Vector x;
  double obj = 0.0;
  /// Sensitivity of the optimum to the active bound of each row
  /// (zero for rows strictly between their bounds).
  Vector row_duals;
  int iterations = 0;
};

struct SimplexOptions {
  double primal_tol = 1e-9;
  double pivot_tol = 1e-9;
  int max_iterations = 0;  ///< 0 selects 50 (m + n) + 1000
};

LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& options = {});

}  // namespace cvarcut::numeric
