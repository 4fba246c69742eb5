#include "cvarcut/numeric/simplex.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace cvarcut::numeric {

namespace {

enum class VarState : unsigned char { Basic, AtLower, AtUpper, FreeZero };

constexpr double kDualTol = 1e-9;
constexpr int kDegenerateSwitch = 50;
constexpr int kRefreshInterval = 100;

}  // namespace

// Dense tableau form of the bounded dual simplex. Columns 0..n-1 are the
// structural variables, n..n+m-1 the row activities s_i = R_i x, so the
// constraint system reads [R, -I] (x, s) = 0 with bounds on every column.
LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& options) {
  const auto m = lp.rows.rows();
  const auto n = lp.rows.cols();
  if (lp.cost.size() != n || lp.col_lo.size() != n || lp.col_hi.size() != n || lp.row_lo.size() != m ||
      lp.row_hi.size() != m)
    throw std::invalid_argument("solve_lp: inconsistent dimensions");
  const auto nt = n + m;

  Vector lo(nt), hi(nt), cost = Vector::Zero(nt);
  lo.head(n) = lp.col_lo;
  hi.head(n) = lp.col_hi;
  lo.tail(m) = lp.row_lo;
  hi.tail(m) = lp.row_hi;
  cost.head(n) = lp.cost;

  LpSolution sol;
  for (Eigen::Index j = 0; j < nt; ++j) {
    if (lo[j] > hi[j]) {
      sol.status = LpStatus::Infeasible;
      return sol;
    }
  }

  std::vector<VarState> state(static_cast<std::size_t>(nt), VarState::Basic);
  Vector val = Vector::Zero(nt);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double c = cost[j];
    auto& st = state[static_cast<std::size_t>(j)];
    if (c > 0.0) {
      if (!std::isfinite(lo[j])) throw std::invalid_argument("solve_lp: positive cost on a column without lower bound");
      st = VarState::AtLower;
    } else if (c < 0.0) {
      if (!std::isfinite(hi[j])) throw std::invalid_argument("solve_lp: negative cost on a column without upper bound");
      st = VarState::AtUpper;
    } else if (std::isfinite(lo[j])) {
      st = VarState::AtLower;
    } else if (std::isfinite(hi[j])) {
      st = VarState::AtUpper;
    } else {
      st = VarState::FreeZero;
    }
    val[j] = st == VarState::AtLower ? lo[j] : st == VarState::AtUpper ? hi[j] : 0.0;
  }

  Matrix original(m, nt);
  original.leftCols(n) = -lp.rows;
  original.rightCols(m).setIdentity();
  Matrix tab = original;
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;
  Vector d = cost;

  // Rebuilds the tableau and reduced costs from the original rows, discarding
  // the round-off accumulated by the rank-one updates.
  int since_refresh = 0;
  auto refresh = [&] {
    Matrix B(m, m);
    Vector cost_b(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      B.col(r) = original.col(basis[static_cast<std::size_t>(r)]);
      cost_b[r] = cost[basis[static_cast<std::size_t>(r)]];
    }
    const Eigen::PartialPivLU<Matrix> lu(B);
    tab = lu.solve(original);
    d = cost - tab.transpose() * cost_b;
    for (Eigen::Index r = 0; r < m; ++r) d[basis[static_cast<std::size_t>(r)]] = 0.0;
    since_refresh = 0;
  };

  Vector xb(m);
  Vector nonbasic_val(nt);
  // Does the current point violate [R, -I] (x, s) = 0 beyond round-off?
  auto drifted = [&] {
    Vector full = nonbasic_val;
    for (Eigen::Index r = 0; r < m; ++r) full[basis[static_cast<std::size_t>(r)]] = xb[r];
    const Vector residual = original * full;
    const double scale = 1.0 + full.cwiseAbs().maxCoeff();
    return m > 0 && residual.cwiseAbs().maxCoeff() > 1e-9 * scale;
  };

  const int max_iter = options.max_iterations > 0 ? options.max_iterations : static_cast<int>(50 * nt + 1000);
  int degenerate_run = 0;

  for (int iter = 0;; ++iter) {
    for (Eigen::Index j = 0; j < nt; ++j)
      nonbasic_val[j] = state[static_cast<std::size_t>(j)] == VarState::Basic ? 0.0 : val[j];
    xb.noalias() = -(tab * nonbasic_val);

    const bool bland = degenerate_run >= kDegenerateSwitch;
    Eigen::Index leave_row = -1;
    double worst = 0.0;
    Eigen::Index leave_var = -1;
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto var = basis[static_cast<std::size_t>(r)];
      const double tol = options.primal_tol * (1.0 + std::abs(xb[r]));
      double viol = 0.0;
      if (xb[r] < lo[var] - tol) viol = lo[var] - xb[r];
      else if (xb[r] > hi[var] + tol) viol = xb[r] - hi[var];
      if (viol <= 0.0) continue;
      if (bland ? (leave_var < 0 || var < leave_var) : viol > worst) {
        worst = viol;
        leave_row = r;
        leave_var = var;
      }
    }

    if (leave_row < 0 && since_refresh > 0 && drifted()) {
      refresh();
      continue;
    }
    if (leave_row < 0) {
      sol.status = LpStatus::Optimal;
      sol.iterations = iter;
      break;
    }
    if (iter >= max_iter) {
      sol.status = LpStatus::IterLimit;
      sol.iterations = iter;
      break;
    }

    const bool increase = xb[leave_row] < lo[leave_var];
    // Eligible entering columns move x_B[r] towards the violated bound while
    // staying dual feasible.
    auto eligible = [&](Eigen::Index j, double alpha) {
      const auto st = state[static_cast<std::size_t>(j)];
      if (st == VarState::Basic || std::abs(alpha) <= options.pivot_tol) return false;
      if (st == VarState::FreeZero) return true;
      if (lo[j] == hi[j]) return false;
      // Raising column j by t changes x_B[r] by -alpha t.
      const bool raise = st == VarState::AtLower;
      return increase ? (raise ? alpha < 0.0 : alpha > 0.0) : (raise ? alpha > 0.0 : alpha < 0.0);
    };

    Eigen::Index enter = -1;
    if (bland) {
      double best = kInf;
      for (Eigen::Index j = 0; j < nt; ++j) {
        const double alpha = tab(leave_row, j);
        if (!eligible(j, alpha)) continue;
        const double ratio = std::abs(d[j]) / std::abs(alpha);
        if (ratio < best - 1e-14) {
          best = ratio;
          enter = j;
        }
      }
    } else {
      // Harris two-pass ratio test.
      double bound = kInf;
      for (Eigen::Index j = 0; j < nt; ++j) {
        const double alpha = tab(leave_row, j);
        if (!eligible(j, alpha)) continue;
        bound = std::min(bound, (std::abs(d[j]) + kDualTol) / std::abs(alpha));
      }
      double best_alpha = 0.0;
      for (Eigen::Index j = 0; j < nt; ++j) {
        const double alpha = tab(leave_row, j);
        if (!eligible(j, alpha)) continue;
        if (std::abs(d[j]) / std::abs(alpha) <= bound && std::abs(alpha) > best_alpha) {
          best_alpha = std::abs(alpha);
          enter = j;
        }
      }
    }

    if (enter < 0 && since_refresh > 0) {
      refresh();
      continue;
    }
    if (enter < 0) {
      sol.status = LpStatus::Infeasible;
      sol.iterations = iter;
      break;
    }

    const double step = std::abs(d[enter]) / std::abs(tab(leave_row, enter));
    degenerate_run = step < 1e-12 ? degenerate_run + 1 : 0;

    auto& leave_state = state[static_cast<std::size_t>(leave_var)];
    leave_state = increase ? VarState::AtLower : VarState::AtUpper;
    val[leave_var] = increase ? lo[leave_var] : hi[leave_var];

    const double pivot = tab(leave_row, enter);
    tab.row(leave_row) /= pivot;
    const Vector pivot_row = tab.row(leave_row).transpose();
    Vector col = tab.col(enter);
    col[leave_row] = 0.0;
    tab.noalias() -= col * pivot_row.transpose();
    d -= d[enter] * pivot_row;
    d[enter] = 0.0;

    basis[static_cast<std::size_t>(leave_row)] = enter;
    state[static_cast<std::size_t>(enter)] = VarState::Basic;
    if (++since_refresh >= kRefreshInterval) refresh();
  }

  Vector full = val;
  for (Eigen::Index j = 0; j < nt; ++j)
    if (state[static_cast<std::size_t>(j)] == VarState::Basic) full[j] = 0.0;
  for (Eigen::Index r = 0; r < m; ++r) full[basis[static_cast<std::size_t>(r)]] = xb[r];
  sol.x = full.head(n);
  sol.obj = lp.cost.dot(sol.x);
  sol.row_duals = d.tail(m);
  return sol;
}

}  // namespace cvarcut::numeric
