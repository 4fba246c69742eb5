#pragma once

// Mehrotra predictor-corrector interior-point method for
//   min 1/2 x^T D x + q^T x  s.t.  G x <= h,  A x = b,   D diagonal >= 0,
// written against an abstract Newton-system backend so that structured
// programs can supply their own factorization of H = D + G^T W G.

#include "cvarcut/numeric/convex_program.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>

namespace cvarcut::numeric {

template <class Op>
concept NewtonBackend = requires(Op op, const Op cop, const Vector& v, Vector& out, Vector& out2) {
  { cop.n() } -> std::convertible_to<Eigen::Index>;
  { cop.m() } -> std::convertible_to<Eigen::Index>;
  { cop.p() } -> std::convertible_to<Eigen::Index>;
  { cop.quad_diag() } -> std::convertible_to<const Vector&>;
  { cop.lin() } -> std::convertible_to<const Vector&>;
  { cop.ineq_h() } -> std::convertible_to<const Vector&>;
  { cop.eq_b() } -> std::convertible_to<const Vector&>;
  cop.apply_G(v, out);
  cop.apply_Gt(v, out);
  cop.apply_A(v, out);
  cop.apply_At(v, out);
  op.factor(v);  // weights w of H = D + G^T diag(w) G
  cop.solve(v, v, out, out2);  // [H A^T; A 0] (dx, dy) = (rx, ry)
};

template <NewtonBackend Op>
Solution interior_point(Op& op, const IpmOptions& options) {
  const auto n = op.n();
  const auto m = op.m();
  const auto p = op.p();
  const Vector& D = op.quad_diag();
  const Vector& q = op.lin();
  const Vector& h = op.ineq_h();
  const Vector& b = op.eq_b();

  const double norm_h = m > 0 ? h.cwiseAbs().maxCoeff() : 0.0;
  const double norm_b = p > 0 ? b.cwiseAbs().maxCoeff() : 0.0;
  const double norm_q = n > 0 ? q.cwiseAbs().maxCoeff() : 0.0;
  const double primal_scale = 1.0 + norm_h + norm_b;

  Vector x(n), s(m), z(m), y(p);
  Vector gx(m), gtz(n), ax(p), aty(n);
  Vector rd(n), rp(m), re(p);
  Vector dx(n), dy(p), dz(m), ds(m);
  Vector w(m), rhs_x(n), rhs_y(p), tmp_m(m), tmp_n(n);

  auto solve_kkt = [&](const Vector& rx, const Vector& ry, Vector& sx, Vector& sy) {
    op.solve(rx, ry, sx, sy);
    // Iterative refinement against the unregularized system while it helps.
    Vector res_x(n), res_y(p), gv(m), gtv(n), av(p), atv(n), cx(n), cy(p);
    double last = std::numeric_limits<double>::infinity();
    for (int step = 0; step < 4; ++step) {
      op.apply_G(sx, gv);
      op.apply_Gt(w.cwiseProduct(gv), gtv);
      op.apply_At(sy, atv);
      res_x = rx - D.cwiseProduct(sx) - gtv - atv;
      res_y = ry;
      if (p > 0) {
        op.apply_A(sx, av);
        res_y -= av;
      }
      const double norm = std::max(n > 0 ? res_x.cwiseAbs().maxCoeff() : 0.0, p > 0 ? res_y.cwiseAbs().maxCoeff() : 0.0);
      if (!(norm < 0.5 * last) || norm == 0.0) break;
      last = norm;
      op.solve(res_x, res_y, cx, cy);
      sx += cx;
      sy += cy;
    }
  };

  auto newton = [&](const Vector& rc) {
    // rhs_x = -rd - G^T (w o rp - rc / s)
    tmp_m = w.cwiseProduct(rp) - rc.cwiseQuotient(s);
    op.apply_Gt(tmp_m, tmp_n);
    rhs_x = -rd - tmp_n;
    rhs_y = -re;
    solve_kkt(rhs_x, rhs_y, dx, dy);
    op.apply_G(dx, tmp_m);
    dz = w.cwiseProduct(tmp_m + rp) - rc.cwiseQuotient(s);
    ds = -rp - tmp_m;
  };

  auto max_step = [&](const Vector& v, const Vector& dv) {
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
    return alpha;
  };

  // Starting point: least-squares style solve with unit weights, then shift
  // slacks and multipliers into the positive orthant.
  w.setOnes();
  op.factor(w);
  {
    Vector rx = -q;
    if (m > 0) {
      op.apply_Gt(h, tmp_n);
      rx += tmp_n;
    }
    Vector ry = b;
    solve_kkt(rx, ry, x, y);
  }
  if (m > 0) {
    op.apply_G(x, gx);
    s = h - gx;
    const double smin = s.minCoeff();
    if (smin < 1.0) s.array() += 1.0 - std::min(smin, 0.0);
    s = s.cwiseMax(1.0);
    z.setOnes();
  }
  y.setZero();

  constexpr int kMaxStall = 8;
  double best_merit = std::numeric_limits<double>::infinity();
  int stall = 0;
  Vector best_x = x, best_s = s, best_z = z, best_y = y;

  Solution sol;
  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    sol.iterations = iter;
    op.apply_G(x, gx);
    op.apply_Gt(z, gtz);
    op.apply_A(x, ax);
    op.apply_At(y, aty);
    rd = D.cwiseProduct(x) + q + gtz + aty;
    rp = gx + s - h;
    re = ax - b;
    const double obj = 0.5 * x.dot(D.cwiseProduct(x)) + q.dot(x);
    const double gap = m > 0 ? s.dot(z) : 0.0;
    const double mu = m > 0 ? gap / static_cast<double>(m) : 0.0;

    const double rp_norm = std::max(m > 0 ? rp.cwiseAbs().maxCoeff() : 0.0, p > 0 ? re.cwiseAbs().maxCoeff() : 0.0);
    const double rd_norm = n > 0 ? rd.cwiseAbs().maxCoeff() : 0.0;
    // The dual residual is measured against the terms that cancel in it;
    // large multipliers otherwise leave it stuck at rounding level.
    const double dual_scale = n > 0 ? std::max({1.0 + norm_q, 1.0 + D.cwiseProduct(x).cwiseAbs().maxCoeff(),
                                                1.0 + gtz.cwiseAbs().maxCoeff(), 1.0 + aty.cwiseAbs().maxCoeff()})
                                    : 1.0;
    if (rp_norm <= options.tol * primal_scale && rd_norm <= options.tol * dual_scale &&
        gap <= options.tol * (1.0 + std::abs(obj))) {
      sol.status = SolveStatus::Optimal;
      break;
    }
    if (n > 0 && x.cwiseAbs().maxCoeff() > 1e12) {
      sol.status = SolveStatus::Unbounded;
      break;
    }

    // Remember the best iterate. Once it is acceptable, rounding error may
    // stall further progress; then fall back to it.
    const double merit = std::max({rp_norm / primal_scale, rd_norm / dual_scale, gap / (1.0 + std::abs(obj))});
    if (merit < best_merit) {
      stall = merit < 0.5 * best_merit ? 0 : stall + 1;
      best_merit = merit;
      best_x = x;
      best_s = s;
      best_z = z;
      best_y = y;
    } else {
      ++stall;
    }
    if (iter == options.max_iterations || (best_merit <= options.acceptable_tol && stall >= kMaxStall)) {
      x = best_x;
      s = best_s;
      z = best_z;
      y = best_y;
      sol.status = best_merit <= options.acceptable_tol ? SolveStatus::Optimal : SolveStatus::IterLimit;
      break;
    }

    if (m > 0) w = z.cwiseQuotient(s);
    op.factor(w);

    if (m == 0) {
      Vector rc(0);
      newton(rc);
      x += dx;
      y += dy;
      continue;
    }

    // Predictor.
    Vector rc = s.cwiseProduct(z);
    newton(rc);
    const double alpha_aff = std::min(max_step(s, ds), max_step(z, dz));
    const double mu_aff = (s + alpha_aff * ds).dot(z + alpha_aff * dz) / static_cast<double>(m);
    const double sigma = std::pow(std::max(mu_aff, 0.0) / mu, 3.0);

    // Corrector.
    rc = s.cwiseProduct(z) + ds.cwiseProduct(dz);
    rc.array() -= sigma * mu;
    newton(rc);
    const double alpha = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(z, dz)));

    x += alpha * dx;
    y += alpha * dy;
    s += alpha * ds;
    z += alpha * dz;
  }

  sol.x = x;
  sol.obj = 0.5 * x.dot(D.cwiseProduct(x)) + q.dot(x);
  sol.ineq_duals = z;
  sol.eq_duals = y;
  return sol;
}

/// Factors H (n x n, SPD up to regularization) and the equality Schur
/// complement A H^-1 A^T; shared by the dense and structured backends.
class SchurKkt {
 public:
  void factor(Matrix H, const Matrix& A);
  void solve(const Vector& rx, const Vector& ry, Vector& dx, Vector& dy) const;

 private:
  Eigen::LLT<Matrix> h_llt_;
  Matrix A_;
  Matrix hinv_at_;
  Eigen::LLT<Matrix> schur_llt_;
};

/// Newton backend for an explicit dense ConvexProgram.
class DenseBackend {
 public:
  explicit DenseBackend(const ConvexProgram& prog) : prog_(prog) {}

  Eigen::Index n() const { return prog_.n(); }
  Eigen::Index m() const { return prog_.m(); }
  Eigen::Index p() const { return prog_.p(); }
  const Vector& quad_diag() const { return prog_.quad_diag; }
  const Vector& lin() const { return prog_.lin; }
  const Vector& ineq_h() const { return prog_.ineq_h; }
  const Vector& eq_b() const { return prog_.eq_b; }

  void apply_G(const Vector& x, Vector& out) const { out.noalias() = prog_.ineq_G * x; }
  void apply_Gt(const Vector& z, Vector& out) const { out.noalias() = prog_.ineq_G.transpose() * z; }
  void apply_A(const Vector& x, Vector& out) const { out.noalias() = prog_.eq_A * x; }
  void apply_At(const Vector& y, Vector& out) const { out.noalias() = prog_.eq_A.transpose() * y; }

  void factor(const Vector& w);
  void solve(const Vector& rx, const Vector& ry, Vector& dx, Vector& dy) const { kkt_.solve(rx, ry, dx, dy); }

 private:
  const ConvexProgram& prog_;
  SchurKkt kkt_;
};

}  // namespace cvarcut::numeric
