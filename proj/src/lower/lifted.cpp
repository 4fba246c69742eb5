#include "cvarcut/errors.hpp"
#include "cvarcut/lower.hpp"
#include "cvarcut/numeric/interior_point.hpp"
#include "restrict.hpp"

namespace cvarcut {

namespace {

// Newton backend for the lifted program over u = (x_supp, a, q) with v
// substituted by 1/(1-beta) p^T q. Rows of G, in order:
//   -R x - a - q <= 0   (S rows, multipliers alpha)
//   -q <= 0             (S rows)
//   A x <= b            (M rows, multipliers zeta)
//   -x <= 0             (d rows)
// The q-block of H is diagonal and is eliminated, leaving a (d+1)-square system.
class LiftedBackend {
 public:
  LiftedBackend(const Selection& z, const Instance& inst) {
    const auto support = z.support();
    d_ = static_cast<Eigen::Index>(support.size());
    s_ = inst.n_scenarios();
    m_side_ = inst.n_side();
    U_.resize(s_, d_ + 1);
    U_.leftCols(d_) = -detail::select_columns(inst.scenarios, support);
    U_.col(d_).setConstant(-1.0);
    A_sel_ = detail::select_columns(inst.side_A, support);

    const auto nv = d_ + 1 + s_;
    quad_ = Vector::Zero(nv);
    quad_.head(d_).setConstant(1.0 / inst.gamma);
    gamma_inv_ = 1.0 / inst.gamma;
    lin_ = Vector::Zero(nv);
    lin_[d_] = 1.0;
    lin_.tail(s_) = inst.probs / (1.0 - inst.beta);
    h_ = Vector::Zero(2 * s_ + m_side_ + d_);
    h_.segment(2 * s_, m_side_) = inst.side_b;
    eq_b_ = Vector::Ones(1);
    eq_y_ = Matrix::Zero(1, d_ + 1);
    eq_y_.leftCols(d_).setOnes();
  }

  Eigen::Index n() const { return d_ + 1 + s_; }
  Eigen::Index m() const { return 2 * s_ + m_side_ + d_; }
  Eigen::Index p() const { return 1; }
  const Vector& quad_diag() const { return quad_; }
  const Vector& lin() const { return lin_; }
  const Vector& ineq_h() const { return h_; }
  const Vector& eq_b() const { return eq_b_; }

  void apply_G(const Vector& u, Vector& out) const {
    out.resize(m());
    const auto q = u.tail(s_);
    out.head(s_).noalias() = U_ * u.head(d_ + 1);
    out.head(s_) -= q;
    out.segment(s_, s_) = -q;
    if (m_side_ > 0) out.segment(2 * s_, m_side_).noalias() = A_sel_ * u.head(d_);
    out.tail(d_) = -u.head(d_);
  }

  void apply_Gt(const Vector& w, Vector& out) const {
    out.resize(n());
    const auto w1 = w.head(s_);
    out.head(d_ + 1).noalias() = U_.transpose() * w1;
    if (m_side_ > 0) out.head(d_).noalias() += A_sel_.transpose() * w.segment(2 * s_, m_side_);
    out.head(d_) -= w.tail(d_);
    out.tail(s_) = -w1 - w.segment(s_, s_);
  }

  void apply_A(const Vector& u, Vector& out) const {
    out.resize(1);
    out[0] = u.head(d_).sum();
  }

  void apply_At(const Vector& y, Vector& out) const {
    out = Vector::Zero(n());
    out.head(d_).setConstant(y[0]);
  }

  void factor(const Vector& w) {
    w1_ = w.head(s_);
    lam_ = w1_ + w.segment(s_, s_);
    const Vector coef = w1_.cwiseProduct(w.segment(s_, s_)).cwiseQuotient(lam_);
    Matrix H = U_.transpose() * (coef.asDiagonal() * U_);
    if (m_side_ > 0) H.topLeftCorner(d_, d_) += A_sel_.transpose() * w.segment(2 * s_, m_side_).asDiagonal() * A_sel_;
    H.diagonal().head(d_) += w.tail(d_);
    H.diagonal().head(d_).array() += gamma_inv_;
    kkt_.factor(std::move(H), eq_y_);
  }

  void solve(const Vector& rx, const Vector& ry, Vector& dx, Vector& dy) const {
    const auto rq = rx.tail(s_);
    const Vector scaled = w1_.cwiseProduct(rq).cwiseQuotient(lam_);
    const Vector ry_red = rx.head(d_ + 1) + U_.transpose() * scaled;
    Vector dyv;
    kkt_.solve(ry_red, ry, dyv, dy);
    dx.resize(n());
    dx.head(d_ + 1) = dyv;
    dx.tail(s_) = (rq + w1_.cwiseProduct(U_ * dyv)).cwiseQuotient(lam_);
  }

 private:
  Eigen::Index d_ = 0, s_ = 0, m_side_ = 0;
  Matrix U_;
  Matrix A_sel_;
  Vector quad_, lin_, h_, eq_b_;
  double gamma_inv_ = 1.0;
  Matrix eq_y_;
  Vector w1_, lam_;
  numeric::SchurKkt kkt_;
};

Vector tight_omega(const Vector& alpha, const Vector& zeta, double lambda, const Instance& inst) {
  Vector bound = inst.scenarios.transpose() * alpha;
  bound.array() += lambda;
  if (inst.n_side() > 0) bound -= inst.side_A.transpose() * zeta;
  return bound.cwiseMax(0.0);
}

}  // namespace

std::optional<LiftedResult> solve_lower_lifted(const Selection& z, const Instance& instance) {
  if (static_cast<int>(z.size()) != instance.n_assets()) throw ParameterError("selection length differs from N");
  if (!support_feasible(z, instance)) return std::nullopt;

  LiftedBackend backend(z, instance);
  const auto sol = numeric::interior_point(backend, detail::kLowerIpm);
  if (sol.status != numeric::SolveStatus::Optimal)
    throw SolverError(std::string("lifted lower-level QP: ") + numeric::to_string(sol.status));

  const auto support = z.support();
  const auto d = static_cast<Eigen::Index>(support.size());
  const auto s = instance.n_scenarios();

  LiftedResult out;
  out.solver_obj = sol.obj;
  out.alpha = sol.ineq_duals.head(s);
  out.zeta = sol.ineq_duals.segment(2 * s, instance.n_side());
  out.lambda = -sol.eq_duals[0];
  out.omega = tight_omega(out.alpha, out.zeta, out.lambda, instance);

  const Vector x = detail::full_weights(sol.x.head(d), support, instance.n_assets());
  const auto risk = cvar(x, instance);
  out.portfolio = Portfolio{x, risk.var, risk.cvar - risk.var};
  out.f = objective(out.portfolio, instance);
  return out;
}

double lifted_dual_objective(const Vector& alpha, const Vector& zeta, double lambda, const Selection& z,
                             const Instance& instance) {
  const Vector omega = tight_omega(alpha, zeta, lambda, instance);
  const double side = instance.n_side() > 0 ? instance.side_b.dot(zeta) : 0.0;
  return -0.5 * instance.gamma * z.as_vector().dot(omega.cwiseAbs2()) - side + lambda;
}

}  // namespace cvarcut
