#include "cvarcut/errors.hpp"
#include "cvarcut/lower.hpp"
#include "cvarcut/numeric/interior_point.hpp"
#include "restrict.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <set>

namespace cvarcut {

using detail::select_columns;

ScenarioSubset ScenarioSubset::make(std::vector<int> indices, const Instance& instance) {
  ScenarioSubset out;
  out.weighted_returns = Vector::Zero(instance.n_assets());
  for (int s : indices) {
    out.prob_mass += instance.probs[s];
    out.weighted_returns += instance.probs[s] * instance.scenarios.row(s).transpose();
  }
  out.indices = std::move(indices);
  return out;
}

ScenarioCut scenario_cut(const Vector& x, double a, const Selection& z, const Instance& instance) {
  const Vector zx = x.cwiseProduct(z.as_vector());
  const Vector loss = -(instance.scenarios * zx);
  ScenarioCut cut;
  double sum = 0.0;
  for (Eigen::Index s = 0; s < loss.size(); ++s) {
    const double excess = loss[s] - a;
    if (excess > 1e-10) {
      cut.subset.push_back(static_cast<int>(s));
      sum += instance.probs[s] * excess;
    }
  }
  cut.v_prime = sum / (1.0 - instance.beta);
  return cut;
}

bool support_feasible(const Selection& z, const Instance& instance) {
  const auto support = z.support();
  const auto d = static_cast<Eigen::Index>(support.size());
  if (d == 0) return false;
  const auto m = instance.n_side();
  Matrix G(m + d, d);
  G.topRows(m) = select_columns(instance.side_A, support);
  G.bottomRows(d) = -Matrix::Identity(d, d);
  Vector h = Vector::Zero(m + d);
  h.head(m) = instance.side_b;
  return numeric::feasible(G, h, Matrix::Ones(1, d), Vector::Ones(1)).feasible;
}

DualCertificate recover_certificate(const CpDuals& duals, const std::vector<ScenarioSubset>& subsets,
                                    const Selection& z, const Instance& instance) {
  (void)z;  // omega is completed on every coordinate; z only matters through the objective
  const double scale = 1.0 / (1.0 - instance.beta);
  const auto n = instance.n_assets();
  Vector agg = Vector::Zero(n);
  double mass = 0.0;
  for (std::size_t j = 0; j < subsets.size(); ++j) {
    const double a = duals.alpha[static_cast<Eigen::Index>(j)];
    agg += a * subsets[j].weighted_returns;
    mass += a * subsets[j].prob_mass;
  }
  const double total = duals.alpha.sum();
  if (duals.alpha.size() > 0 && duals.alpha.minCoeff() < 0.0)
    throw CertificateError("negative subset multiplier");
  if (total > 1.0 + 1e-9) throw CertificateError("subset multipliers sum to " + std::to_string(total) + " > 1");
  if (std::abs(mass - (1.0 - instance.beta)) > 1e-8)
    throw CertificateError("probability-weighted multiplier mass deviates from 1 - beta");

  DualCertificate cert;
  cert.alpha = duals.alpha;
  cert.zeta = duals.zeta;
  cert.lambda = duals.lambda;
  Vector bound = scale * agg + Vector::Constant(n, duals.lambda);
  if (instance.n_side() > 0) bound -= instance.side_A.transpose() * duals.zeta;
  cert.omega = bound.cwiseMax(0.0);
  return cert;
}

double dual_objective(const DualCertificate& cert, const Selection& z, const Instance& instance) {
  const double quad = z.as_vector().dot(cert.omega.cwiseAbs2());
  const double side = instance.n_side() > 0 ? instance.side_b.dot(cert.zeta) : 0.0;
  return -0.5 * instance.gamma * quad - side + cert.lambda;
}

Vector subgradient(const DualCertificate& cert, double gamma) { return -0.5 * gamma * cert.omega.cwiseAbs2(); }

namespace {

// Restricted QP over (x_supp, a, v): rows are the subset cuts, -v <= 0,
// side constraints, -x <= 0; one equality 1^T x = 1.
numeric::ConvexProgram restricted_qp(const std::vector<ScenarioSubset>& subsets, const std::vector<int>& support,
                                     const Instance& instance) {
  const auto d = static_cast<Eigen::Index>(support.size());
  const auto nk = static_cast<Eigen::Index>(subsets.size());
  const auto m = instance.n_side();
  const double scale = 1.0 / (1.0 - instance.beta);
  const auto nv = d + 2;

  numeric::ConvexProgram qp;
  qp.quad_diag = Vector::Zero(nv);
  qp.quad_diag.head(d).setConstant(1.0 / instance.gamma);
  qp.lin = Vector::Zero(nv);
  qp.lin[d] = 1.0;
  qp.lin[d + 1] = 1.0;

  qp.ineq_G = Matrix::Zero(nk + 1 + m + d, nv);
  qp.ineq_h = Vector::Zero(nk + 1 + m + d);
  for (Eigen::Index j = 0; j < nk; ++j) {
    const auto& sub = subsets[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < d; ++i) qp.ineq_G(j, i) = -scale * sub.weighted_returns[support[i]];
    qp.ineq_G(j, d) = -scale * sub.prob_mass;
    qp.ineq_G(j, d + 1) = -1.0;
  }
  qp.ineq_G(nk, d + 1) = -1.0;
  if (m > 0) {
    qp.ineq_G.block(nk + 1, 0, m, d) = select_columns(instance.side_A, support);
    qp.ineq_h.segment(nk + 1, m) = instance.side_b;
  }
  qp.ineq_G.block(nk + 1 + m, 0, d, d) = -Matrix::Identity(d, d);

  qp.eq_A = Matrix::Zero(1, nv);
  qp.eq_A.leftCols(d).setOnes();
  qp.eq_b = Vector::Ones(1);
  return qp;
}

}  // namespace

std::optional<LowerResult> solve_lower_cp(const Selection& z, const Instance& instance, double delta) {
  if (delta < 0.0) throw ParameterError("delta must be nonnegative");
  if (static_cast<int>(z.size()) != instance.n_assets()) throw ParameterError("selection length differs from N");
  if (!support_feasible(z, instance)) return std::nullopt;

  const auto support = z.support();
  const auto d = static_cast<Eigen::Index>(support.size());

  std::vector<int> all(static_cast<std::size_t>(instance.n_scenarios()));
  for (std::size_t s = 0; s < all.size(); ++s) all[s] = static_cast<int>(s);

  LowerResult out;
  out.subsets.push_back(ScenarioSubset::make(std::move(all), instance));
  std::set<std::vector<int>> seen{out.subsets.front().indices};

  numeric::Solution sol;
  for (int iter = 1;; ++iter) {
    const auto qp = restricted_qp(out.subsets, support, instance);
    numeric::DenseBackend backend(qp);
    sol = numeric::interior_point(backend, detail::kLowerIpm);
    if (sol.status != numeric::SolveStatus::Optimal)
      throw SolverError(std::string("restricted lower-level QP: ") + numeric::to_string(sol.status));
    out.iters = iter;
    out.qp_dim = std::max(out.qp_dim, static_cast<int>(qp.n()));
    out.qp_values.push_back(sol.obj);

    const Vector x = detail::full_weights(sol.x.head(d), support, instance.n_assets());
    const double a = sol.x[d];
    const double v = sol.x[d + 1];
    auto cut = scenario_cut(x, a, z, instance);

    out.f_lo = sol.obj;
    out.portfolio = Portfolio{x, a, cut.v_prime};
    out.f_hi = objective(out.portfolio, instance);

    if (cut.v_prime - v <= delta) break;
    if (!seen.insert(cut.subset).second) {
      spdlog::debug("lower level: subset repeated at iteration {}, stopping with gap {:g}", iter, cut.v_prime - v);
      break;
    }
    out.subsets.push_back(ScenarioSubset::make(std::move(cut.subset), instance));
  }
  if (out.iters > 30) spdlog::warn("lower-level cutting plane needed {} iterations", out.iters);

  const auto nk = static_cast<Eigen::Index>(out.subsets.size());
  CpDuals duals;
  duals.alpha = sol.ineq_duals.head(nk);
  duals.xi = sol.ineq_duals[nk];
  duals.zeta = sol.ineq_duals.segment(nk + 1, instance.n_side());
  duals.lambda = -sol.eq_duals[0];
  out.certificate = recover_certificate(duals, out.subsets, z, instance);
  const double dual = dual_objective(out.certificate, z, instance);
  if (std::abs(dual - out.f_lo) > 1e-6)
    throw CertificateError("reduced dual objective " + std::to_string(dual) + " differs from lower bound " +
                           std::to_string(out.f_lo));
  return out;
}

}  // namespace cvarcut
