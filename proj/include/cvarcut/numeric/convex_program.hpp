#pragma once

#include "cvarcut/numeric/simplex.hpp"

namespace cvarcut::numeric {

/// min 1/2 x^T diag(quad_diag) x + lin^T x  s.t.  ineq_G x <= ineq_h,  eq_A x = eq_b.
struct ConvexProgram {
  Vector quad_diag;
  Vector lin;
  Matrix ineq_G;
  Vector ineq_h;
  Matrix eq_A;
  Vector eq_b;

  Eigen::Index n() const { return lin.size(); }
  Eigen::Index m() const { return ineq_h.size(); }
  Eigen::Index p() const { return eq_b.size(); }

  /// Throws std::invalid_argument on inconsistent shapes or negative curvature.
  void validate() const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterLimit };

const char* to_string(SolveStatus status);

/// Primal-dual pair. Multipliers follow the Lagrangian
///   f(x) + ineq_duals^T (G x - h) + eq_duals^T (A x - b),
/// so ineq_duals >= 0 and stationarity reads Px + q + G^T z + A^T y = 0.
struct Solution {
  SolveStatus status = SolveStatus::IterLimit;
  Vector x;
  double obj = 0.0;
  Vector ineq_duals;
  Vector eq_duals;
  int iterations = 0;
};

struct IpmOptions {
  double tol = 1e-8;
  int max_iterations = 200;
  /// When rounding error stalls progress short of `tol`, the best iterate is
  /// still reported Optimal if its scaled residuals and gap are within this.
  double acceptable_tol = 1e-8;
};

struct FeasibilityResult {
  bool feasible = false;
  Vector point;
  double violation = 0.0;  ///< optimal total violation of the Phase-1 LP
};

/// Phase-1 LP: minimize total violation of G x <= h, A x = b over free x.
/// Feasible iff the optimum is at most 1e-9.
FeasibilityResult feasible(const Matrix& G, const Vector& h, const Matrix& A, const Vector& b);

/// Phase-1 check followed by the Mehrotra predictor-corrector interior-point method.
Solution solve(const ConvexProgram& prog, const IpmOptions& options = {});

/// Lagrangian dual value q(z, y) of a convex program with strictly positive
/// quad_diag wherever lin or the constraint columns are nonzero. Used to test
/// strong duality on returned multipliers; returns -inf when the inner
/// minimization is unbounded for the given multipliers.
double lagrangian_dual_value(const ConvexProgram& prog, const Vector& ineq_duals, const Vector& eq_duals);

}  // namespace cvarcut::numeric
