#include "cvarcut/numeric/convex_program.hpp"

#include "cvarcut/errors.hpp"
#include "cvarcut/numeric/interior_point.hpp"

#include <cmath>
#include <stdexcept>

namespace cvarcut::numeric {

void ConvexProgram::validate() const {
  const auto nv = n();
  if (quad_diag.size() != nv) throw std::invalid_argument("ConvexProgram: quad_diag length differs from lin");
  if (ineq_G.rows() != m() || (m() > 0 && ineq_G.cols() != nv))
    throw std::invalid_argument("ConvexProgram: ineq_G shape inconsistent");
  if (eq_A.rows() != p() || (p() > 0 && eq_A.cols() != nv))
    throw std::invalid_argument("ConvexProgram: eq_A shape inconsistent");
  if ((quad_diag.array() < 0.0).any()) throw std::invalid_argument("ConvexProgram: quad_diag must be nonnegative");
  if (!quad_diag.allFinite() || !lin.allFinite() || !ineq_G.allFinite() || !ineq_h.allFinite() ||
      !eq_A.allFinite() || !eq_b.allFinite())
    throw std::invalid_argument("ConvexProgram: non-finite data");
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::IterLimit: return "IterLimit";
  }
  return "?";
}

void SchurKkt::factor(Matrix H, const Matrix& A) {
  const auto n = H.rows();
  const double scale = 1.0 + (n > 0 ? H.diagonal().cwiseAbs().maxCoeff() : 0.0);
  // Regularize only when the plain factorization breaks down.
  double reg = 0.0;
  for (int attempt = 0;; ++attempt) {
    H.diagonal().array() += reg;
    h_llt_.compute(H);
    if (h_llt_.info() == Eigen::Success) break;
    if (attempt == 8) throw SolverError("interior point: Newton matrix is not positive definite");
    H.diagonal().array() -= reg;
    reg = reg == 0.0 ? 1e-14 * scale : reg * 100.0;
  }
  A_ = A;
  if (A.rows() > 0) {
    hinv_at_ = h_llt_.solve(A.transpose());
    Matrix schur = A * hinv_at_;
    schur.diagonal().array() += 1e-14 * (1.0 + schur.diagonal().cwiseAbs().maxCoeff());
    schur_llt_.compute(schur);
    if (schur_llt_.info() != Eigen::Success) throw SolverError("interior point: equality Schur complement is singular");
  }
}

void SchurKkt::solve(const Vector& rx, const Vector& ry, Vector& dx, Vector& dy) const {
  if (A_.rows() == 0) {
    dx = h_llt_.solve(rx);
    dy.resize(0);
    return;
  }
  const Vector hinv_rx = h_llt_.solve(rx);
  dy = schur_llt_.solve(A_ * hinv_rx - ry);
  dx = hinv_rx - hinv_at_ * dy;
}

void DenseBackend::factor(const Vector& w) {
  Matrix H = prog_.ineq_G.transpose() * w.asDiagonal() * prog_.ineq_G;
  H.diagonal() += prog_.quad_diag;
  kkt_.factor(std::move(H), prog_.eq_A);
}

FeasibilityResult feasible(const Matrix& G, const Vector& h, const Matrix& A, const Vector& b) {
  const auto m = h.size();
  const auto p = b.size();
  const auto n = m > 0 ? G.cols() : (p > 0 ? A.cols() : 0);
  if (G.rows() != m || A.rows() != p || (m > 0 && p > 0 && G.cols() != A.cols()))
    throw std::invalid_argument("feasible: inconsistent dimensions");

  // Columns: x (free), t (G violations), e+, e- (equality violations).
  const auto cols = n + m + 2 * p;
  LinearProgram lp;
  lp.cost = Vector::Zero(cols);
  lp.cost.tail(m + 2 * p).setOnes();
  lp.col_lo = Vector::Zero(cols);
  lp.col_lo.head(n).setConstant(-kInf);
  lp.col_hi = Vector::Constant(cols, kInf);
  lp.rows = Matrix::Zero(m + p, cols);
  lp.row_lo = Vector(m + p);
  lp.row_hi = Vector(m + p);
  if (m > 0) {
    lp.rows.topLeftCorner(m, n) = G;
    lp.rows.block(0, n, m, m) = -Matrix::Identity(m, m);
    lp.row_lo.head(m).setConstant(-kInf);
    lp.row_hi.head(m) = h;
  }
  if (p > 0) {
    lp.rows.bottomLeftCorner(p, n) = A;
    lp.rows.block(m, n + m, p, p) = Matrix::Identity(p, p);
    lp.rows.block(m, n + m + p, p, p) = -Matrix::Identity(p, p);
    lp.row_lo.tail(p) = b;
    lp.row_hi.tail(p) = b;
  }

  const auto sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal) throw SolverError("Phase-1 LP did not reach optimality");
  FeasibilityResult out;
  out.violation = std::max(sol.obj, 0.0);
  out.feasible = out.violation <= 1e-9;
  out.point = sol.x.head(n);
  return out;
}

Solution solve(const ConvexProgram& prog, const IpmOptions& options) {
  prog.validate();
  const Matrix G = prog.m() > 0 ? prog.ineq_G : Matrix(0, prog.n());
  const Matrix A = prog.p() > 0 ? prog.eq_A : Matrix(0, prog.n());
  const auto phase1 = feasible(G, prog.ineq_h, A, prog.eq_b);
  if (!phase1.feasible) {
    Solution sol;
    sol.status = SolveStatus::Infeasible;
    sol.x = phase1.point;
    sol.ineq_duals = Vector::Zero(prog.m());
    sol.eq_duals = Vector::Zero(prog.p());
    return sol;
  }
  DenseBackend backend(prog);
  return interior_point(backend, options);
}

double lagrangian_dual_value(const ConvexProgram& prog, const Vector& ineq_duals, const Vector& eq_duals) {
  Vector c = prog.lin;
  if (prog.m() > 0) c += prog.ineq_G.transpose() * ineq_duals;
  if (prog.p() > 0) c += prog.eq_A.transpose() * eq_duals;
  double value = -prog.ineq_h.dot(ineq_duals) - prog.eq_b.dot(eq_duals);
  const double tol = 1e-7 * (1.0 + prog.lin.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (prog.quad_diag[i] > 0.0) {
      value -= c[i] * c[i] / (2.0 * prog.quad_diag[i]);
    } else if (std::abs(c[i]) > tol) {
      return -std::numeric_limits<double>::infinity();
    }
  }
  return value;
}

}  // namespace cvarcut::numeric
