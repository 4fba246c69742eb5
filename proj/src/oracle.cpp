#include "cvarcut/oracle.hpp"

#include "cvarcut/errors.hpp"
#include "cvarcut/lower.hpp"

#include <cmath>
#include <limits>

namespace cvarcut {

namespace {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
}

// Calls visit(z) for every support of exactly `size` assets out of n.
template <class Visit>
void for_each_support(int n, int size, Visit&& visit) {
  std::vector<int> idx(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (;;) {
    visit(Selection::from_support(static_cast<std::size_t>(n), idx));
    int i = size - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - size + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < size; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

}  // namespace

std::optional<OracleResult> brute_force(const Instance& instance, int k, bool exactly_k) {
  const int n = instance.n_assets();
  if (k < 1) throw ParameterError("oracle: k must be positive");
  k = std::min(k, n);
  const int smallest = exactly_k ? k : 1;
  double count = 0.0;
  for (int size = smallest; size <= k; ++size) count += binomial(n, size);
  if (count > kOracleBudget)
    throw ParameterError("oracle: " + std::to_string(static_cast<long long>(count)) + " supports exceed the budget");

  std::optional<OracleResult> best;
  long evaluated = 0;
  for (int size = smallest; size <= k; ++size) {
    for_each_support(n, size, [&](const Selection& z) {
      ++evaluated;
      const auto r = solve_lower_lifted(z, instance);
      if (!r) return;
      if (!best || r->f < best->best_f || (r->f == best->best_f && z < best->best_z)) best = OracleResult{z, r->f, 0};
    });
  }
  if (best) best->evaluated = evaluated;
  return best;
}

SolveReport solve_oracle(const Instance& instance) {
  const auto start = Clock::now();
  instance.validate();
  SolveReport report;
  report.method = Method::Oracle;
  report.n_assets = instance.n_assets();
  report.n_scenarios = instance.n_scenarios();
  report.k = instance.k;
  report.beta = instance.beta;
  report.gamma = instance.gamma;
  report.options.eps = 0.0;
  report.options.delta = 0.0;

  const auto best = brute_force(instance, instance.k);
  report.status = best ? Status::Optimal : Status::Infeasible;
  report.lower_bound = best ? best->best_f : std::numeric_limits<double>::infinity();
  report.iterations = best ? static_cast<int>(best->evaluated) : 0;
  finalize_report(report, best ? std::optional<Selection>(best->best_z) : std::nullopt, instance);
  if (best) report.lower_bound = report.obj;
  report.gap_pct = best ? 0.0 : report.gap_pct;
  report.time_sec = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

}  // namespace cvarcut
