#pragma once

// Lower-level problem f(z): best portfolio for a fixed asset selection.

#include "cvarcut/model.hpp"

#include <optional>
#include <vector>

namespace cvarcut {

/// Scenario index set J with its aggregates P_J = sum p_s and R_J = sum p_s r_s (length N).
struct ScenarioSubset {
  std::vector<int> indices;
  double prob_mass = 0.0;
  Vector weighted_returns;

  static ScenarioSubset make(std::vector<int> indices, const Instance& instance);
};

/// Multipliers of the reduced dual: alpha indexed like the subset family.
struct DualCertificate {
  Vector alpha;
  Vector zeta;
  double lambda = 0.0;
  Vector omega;  // length N, defined for every asset
};

struct LowerResult {
  double f_lo = 0.0;
  double f_hi = 0.0;
  Portfolio portfolio;
  std::vector<ScenarioSubset> subsets;  // first entry is the full scenario set
  DualCertificate certificate;
  int iters = 0;
  int qp_dim = 0;  // variables in the largest restricted QP solved
  /// Objective of every restricted QP, in order (nondecreasing up to solver tolerance).
  std::vector<double> qp_values;
};

struct ScenarioCut {
  std::vector<int> subset;
  double v_prime = 0.0;
};

/// J = {s : -r_s^T (Z x) - a > 1e-10}, v' = 1/(1-beta) sum_{s in J} p_s (-r_s^T Z x - a).
ScenarioCut scenario_cut(const Vector& x, double a, const Selection& z, const Instance& instance);

/// Scenario cutting-plane method over the support of z. The instance's side
/// constraints define X. Returns nullopt when {x in X : x_n = 0 off supp(z)}
/// is empty; throws SolverError when a restricted QP fails.
std::optional<LowerResult> solve_lower_cp(const Selection& z, const Instance& instance, double delta);

/// Multipliers of the last restricted QP, in its row order.
struct CpDuals {
  Vector alpha;  // one per subset
  double xi = 0.0;
  Vector zeta;
  double lambda = 0.0;
};

/// omega_n = max(1/(1-beta) sum_J alpha_J R_J[n] - (A^T zeta)_n + lambda, 0).
/// Throws CertificateError when sum alpha > 1 + 1e-9 or
/// |sum alpha_J P_J - (1-beta)| > 1e-8.
DualCertificate recover_certificate(const CpDuals& duals, const std::vector<ScenarioSubset>& subsets,
                                    const Selection& z, const Instance& instance);

/// -(gamma/2) z^T (omega o omega) - b^T zeta + lambda.
double dual_objective(const DualCertificate& cert, const Selection& z, const Instance& instance);

/// g_n = -(gamma/2) omega_n^2.
Vector subgradient(const DualCertificate& cert, double gamma);

struct LiftedResult {
  double f = 0.0;  // exact objective of the returned portfolio
  double solver_obj = 0.0;
  Portfolio portfolio;
  Vector alpha;  // length S
  Vector zeta;
  double lambda = 0.0;
  Vector omega;  // length N
};

/// Exact lower-level solve through the per-scenario lifting. Returns nullopt
/// when the support cannot meet X; throws SolverError on solver failure.
std::optional<LiftedResult> solve_lower_lifted(const Selection& z, const Instance& instance);

/// Objective of the lifted dual evaluated at (alpha, zeta, lambda) with the
/// tightest omega; alpha must satisfy sum alpha = 1, 0 <= alpha_s <= p_s/(1-beta).
double lifted_dual_objective(const Vector& alpha, const Vector& zeta, double lambda, const Selection& z,
                             const Instance& instance);

/// Is {x in X : 1^T x = 1, x >= 0, x_n = 0 off supp(z)} nonempty (Phase-1 LP)?
bool support_feasible(const Selection& z, const Instance& instance);

}  // namespace cvarcut
