// Acceptance checks: prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Every tolerance used here is pinned below.

#include "cvarcut/driver.hpp"
#include "cvarcut/errors.hpp"
#include "cvarcut/lower.hpp"
#include "cvarcut/oracle.hpp"
#include "cvarcut/report.hpp"
#include "instances.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace cvarcut {
namespace {

using testing::random_instance;
using testing::random_selection;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Criterion 1 and 6 suite.
constexpr int kSuiteSeeds = 20;
constexpr int kSuiteN = 10;
constexpr int kSuiteK = 3;
constexpr int kSuiteS = 50;
constexpr double kOracleSlack = 1e-5;  // added to max(delta, eps)
constexpr double kHonestyTol = 1e-7;
// Criteria 2 to 5.
constexpr int kPairs = 50;
constexpr int kCutPairs = 200;
constexpr double kDualityRelTol = 1e-7;
constexpr double kCertificateTol = 1e-6;
constexpr double kCertificateInvariantTol = 1e-8;
constexpr double kSandwichSlack = 1e-9;
constexpr double kCutTol = 1e-7;
// Criterion 7.
constexpr int kSpeedN = 25;
constexpr int kSpeedK = 10;
constexpr int kSpeedS = 20000;
constexpr double kSpeedRatio = 0.5;
constexpr double kSpeedBudgetSec = 300.0;
// Criterion 8.
constexpr int kScaleN = 50;
constexpr int kScaleK = 10;
constexpr int kScaleS = 100000;
constexpr double kScaleBudgetSec = 1800.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double exact_f(const Selection& z, const Instance& inst) {
  const auto r = solve_lower_lifted(z, inst);
  return r ? r->f : kInf;
}

Instance suite_instance(int seed) {
  return random_instance(kSuiteN, kSuiteK, kSuiteS, static_cast<std::uint64_t>(seed));
}

// Random instance and support for the lower-level property checks: N <= 10, S <= 200.
struct Pair {
  Instance inst;
  Selection z;
};

Pair random_pair(std::mt19937_64& rng, int index) {
  std::uniform_int_distribution<int> n_dist(2, 10);
  std::uniform_int_distribution<int> s_dist(10, 200);
  const int n = n_dist(rng);
  const int k = std::uniform_int_distribution<int>(1, n)(rng);
  auto inst = random_instance(n, k, s_dist(rng), 5000 + static_cast<std::uint64_t>(index));
  auto z = random_selection(n, std::uniform_int_distribution<int>(1, n)(rng), rng);
  return {std::move(inst), std::move(z)};
}

// Draws pairs until `count` of them have a feasible support.
template <class Check>
int for_feasible_pairs(std::uint64_t seed, int count, Check&& check) {
  std::mt19937_64 rng(seed);
  int done = 0;
  for (int index = 0; done < count; ++index) {
    if (index > 20 * count) throw SolverError("too few feasible supports drawn");
    const auto pair = random_pair(rng, index);
    if (!support_feasible(pair.z, pair.inst)) continue;
    check(pair);
    ++done;
  }
  return done;
}

struct SuiteRun {
  Instance inst;
  OracleResult oracle;
  std::vector<SolveReport> reports;  // bcp, cp, bigm
};

std::vector<SuiteRun> run_suite() {
  std::vector<SuiteRun> out;
  for (int seed = 1; seed <= kSuiteSeeds; ++seed) {
    auto inst = suite_instance(seed);
    auto best = brute_force(inst, inst.k, false);
    if (!best) throw SolverError(fmt::format("suite seed {} has no feasible support", seed));
    std::vector<SolveReport> reports{solve_bcp(inst, {}), solve_cp(inst, {}), solve_bigm(inst, {})};
    out.push_back({std::move(inst), *best, std::move(reports)});
  }
  return out;
}

Outcome criterion1(const std::vector<SuiteRun>& suite) {
  Outcome o;
  int same_support = 0;
  int runs = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const auto& run = suite[i];
    for (const auto& r : run.reports) {
      ++runs;
      const double tol = kOracleSlack + std::max(r.options.delta, r.options.eps);
      const double diff = std::abs(r.obj - run.oracle.best_f);
      worst = std::max(worst, diff);
      bool ok = r.status == Status::Optimal && diff <= tol && r.selection.count() <= run.inst.k;
      if (r.selection == run.oracle.best_z) {
        ++same_support;
      } else {
        // A different support is acceptable only as an objective tie.
        ok = ok && std::abs(exact_f(r.selection, run.inst) - run.oracle.best_f) <= tol;
      }
      if (!ok) {
        o.pass = false;
        o.detail += fmt::format(" [seed {} {}: obj {:.10g} vs {:.10g}]", i + 1, to_string(r.method), r.obj,
                                run.oracle.best_f);
      }
    }
  }
  o.detail = fmt::format("{} runs, max |obj - oracle| {:.2e}, {} identical supports", runs, worst, same_support) +
             o.detail;
  return o;
}

Outcome criterion2() {
  Outcome o;
  double worst = 0.0;
  for_feasible_pairs(202, kPairs, [&](const Pair& p) {
    const auto r = solve_lower_lifted(p.z, p.inst);
    const double dual = lifted_dual_objective(r->alpha, r->zeta, r->lambda, p.z, p.inst);
    const double rel = std::abs(r->f - dual) / (1.0 + std::abs(r->f));
    worst = std::max(worst, rel);
    if (rel > kDualityRelTol) o.pass = false;
  });
  o.detail = fmt::format("{} pairs, max |primal - dual|/(1+|f|) {:.2e} (tol {:.0e})", kPairs, worst, kDualityRelTol);
  return o;
}

Outcome criterion3() {
  Outcome o;
  double worst = 0.0;
  int violations = 0;
  for_feasible_pairs(303, kPairs, [&](const Pair& p) {
    const double delta = kDefaultTolerance;
    const auto r = solve_lower_cp(p.z, p.inst, delta);
    const auto& c = r->certificate;
    const double one_minus_beta = 1.0 - p.inst.beta;

    // Invariants, recomputed here from the raw multipliers.
    bool ok = c.alpha.size() == static_cast<Eigen::Index>(r->subsets.size());
    ok = ok && c.alpha.minCoeff() >= -kCertificateInvariantTol;
    ok = ok && c.alpha.sum() <= 1.0 + kCertificateInvariantTol;
    double mass = 0.0;
    Vector weighted = Vector::Zero(p.inst.n_assets());
    for (std::size_t j = 0; j < r->subsets.size(); ++j) {
      const auto& sub = r->subsets[j];
      double pj = 0.0;
      Vector rj = Vector::Zero(p.inst.n_assets());
      for (int s : sub.indices) {
        pj += p.inst.probs[s];
        rj += p.inst.probs[s] * p.inst.scenarios.row(s).transpose();
      }
      mass += c.alpha[static_cast<Eigen::Index>(j)] * pj;
      weighted += c.alpha[static_cast<Eigen::Index>(j)] * rj;
    }
    ok = ok && std::abs(mass - one_minus_beta) <= kCertificateInvariantTol;
    if (c.zeta.size() > 0) ok = ok && c.zeta.minCoeff() >= -kCertificateInvariantTol;
    const Vector side = p.inst.n_side() > 0 ? Vector(p.inst.side_A.transpose() * c.zeta)
                                            : Vector(Vector::Zero(p.inst.n_assets()));
    const Vector omega = (weighted / one_minus_beta - side).array() + c.lambda;
    for (int n = 0; n < p.inst.n_assets(); ++n)
      ok = ok && std::abs(c.omega[n] - std::max(omega[n], 0.0)) <= kCertificateTol;
    // The library's own check must accept it as well.
    try {
      recover_certificate({c.alpha, 0.0, c.zeta, c.lambda}, r->subsets, p.z, p.inst);
    } catch (const CertificateError&) {
      ok = false;
    }
    const double diff = std::abs(dual_objective(c, p.z, p.inst) - r->f_lo);
    worst = std::max(worst, diff);
    ok = ok && diff <= kCertificateTol;
    if (!ok) ++violations;
  });
  o.pass = violations == 0;
  o.detail = fmt::format("{} pairs, {} invariant violations, max |dual - f_delta| {:.2e} (tol {:.0e})", kPairs,
                         violations, worst, kCertificateTol);
  return o;
}

Outcome criterion4() {
  Outcome o;
  int violations = 0;
  double worst_gap = 0.0;
  for (double delta : {1e-3, 1e-5}) {
    for_feasible_pairs(404 + static_cast<std::uint64_t>(delta * 1e5), kPairs, [&](const Pair& p) {
      const auto cp = solve_lower_cp(p.z, p.inst, delta);
      const double f = exact_f(p.z, p.inst);
      const double tol = kSandwichSlack * (1.0 + std::abs(f));
      const bool ok = cp->f_lo <= f + tol && f <= cp->f_hi + tol && cp->f_hi <= cp->f_lo + delta + kSandwichSlack;
      worst_gap = std::max(worst_gap, (cp->f_hi - cp->f_lo) / delta);
      if (!ok) ++violations;
    });
  }
  o.pass = violations == 0;
  o.detail = fmt::format("{} pairs per delta in {{1e-3, 1e-5}}, {} violations, max (f_hi - f_lo)/delta {:.3f}", kPairs,
                         violations, worst_gap);
  return o;
}

Outcome criterion5() {
  Outcome o;
  std::mt19937_64 rng(505);
  int pairs = 0;
  int violations = 0;
  double worst = -kInf;
  for (int index = 0; pairs < kCutPairs; ++index) {
    if (index > 20 * kCutPairs) throw SolverError("too few feasible supports drawn");
    const auto base = random_pair(rng, 10000 + index);
    const auto cp = solve_lower_cp(base.z, base.inst, kDefaultTolerance);
    if (!cp) continue;
    const int n = base.inst.n_assets();
    const auto z = random_selection(n, std::uniform_int_distribution<int>(1, n)(rng), rng);
    const double f = exact_f(z, base.inst);
    if (!std::isfinite(f)) continue;
    const Vector g = subgradient(cp->certificate, base.inst.gamma);
    const double cut = cp->f_lo + g.dot(z.as_vector() - base.z.as_vector());
    worst = std::max(worst, cut - f);
    if (f < cut - kCutTol) ++violations;
    ++pairs;
  }
  o.pass = violations == 0;
  o.detail = fmt::format("{} pairs, {} violations, max (cut - f) {:.2e} (tol {:.0e})", pairs, violations, worst, kCutTol);
  return o;
}

Outcome criterion6(const std::vector<SuiteRun>& suite) {
  Outcome o;
  int entries = 0;
  int violations = 0;
  for (const auto& run : suite) {
    for (const auto& r : run.reports) {
      if (r.method != Method::Bcp && r.method != Method::Cp) continue;
      const double opt = run.oracle.best_f;
      if (r.trace.empty()) ++violations;
      for (std::size_t t = 0; t < r.trace.size(); ++t) {
        ++entries;
        bool ok = r.trace[t].lower <= opt + kHonestyTol && r.trace[t].upper >= opt - kHonestyTol;
        if (t > 0) ok = ok && r.trace[t].lower >= r.trace[t - 1].lower && r.trace[t].upper <= r.trace[t - 1].upper;
        if (!ok) ++violations;
      }
    }
  }
  o.pass = violations == 0;
  o.detail = fmt::format("{} trace entries over {} BCP/CP runs, {} violations (tol {:.0e})", entries,
                         2 * suite.size(), violations, kHonestyTol);
  return o;
}

Outcome criterion7() {
  Outcome o;
  int passed = 0;
  std::string runs;
  for (std::uint64_t seed : {71, 72, 73}) {
    const auto inst = random_instance(kSpeedN, kSpeedK, kSpeedS, seed);
    auto start = std::chrono::steady_clock::now();
    const auto bcp = solve_bcp(inst, {});
    const double t_bcp = seconds_since(start);
    start = std::chrono::steady_clock::now();
    const auto cp = solve_cp(inst, {});
    const double t_cp = seconds_since(start);
    const bool ok = bcp.status == Status::Optimal && cp.status == Status::Optimal && t_bcp < kSpeedRatio * t_cp &&
                    t_bcp < kSpeedBudgetSec;
    passed += ok;
    runs += fmt::format(" [seed {}: bcp {:.2f}s, cp {:.2f}s, ratio {:.3f}, {}]", seed, t_bcp, t_cp, t_bcp / t_cp,
                        ok ? "ok" : "no");
  }
  o.pass = passed >= 2;
  o.detail = fmt::format("{}/3 seeds with bcp < {} x cp and < {:.0f}s", passed, kSpeedRatio, kSpeedBudgetSec) + runs;
  return o;
}

Outcome criterion8() {
  Outcome o;
  const auto inst = random_instance(kScaleN, kScaleK, kScaleS, 81);
  const auto start = std::chrono::steady_clock::now();
  SolveOptions opt;
  opt.time_limit = kScaleBudgetSec;
  const auto r = solve_bcp(inst, opt);
  const double elapsed = seconds_since(start);
  // Restricted QPs have one variable per asset plus (a, v), never one per scenario.
  const auto full = solve_lower_cp(Selection::all(kScaleN), inst, kDefaultTolerance);
  const bool structural = full && full->qp_dim == kScaleN + 2;
  bool at_solution = false;
  int dim_at_solution = -1;
  if (r.status == Status::Optimal) {
    const auto best = solve_lower_cp(r.selection, inst, kDefaultTolerance);
    at_solution = best && best->qp_dim <= r.selection.count() + 2;
    dim_at_solution = best ? best->qp_dim : -1;
  }
  o.pass = r.status == Status::Optimal && elapsed < kScaleBudgetSec && structural && at_solution;
  o.detail = fmt::format("status {}, {:.1f}s (budget {:.0f}s), gap {:.2e}%, QP dim at 1_N {} (N+2 = {}), at solution {}",
                         to_string(r.status), elapsed, kScaleBudgetSec, r.gap_pct, full ? full->qp_dim : -1,
                         kScaleN + 2, dim_at_solution);
  return o;
}

std::vector<std::string> suite_reports(const std::vector<SuiteRun>& suite) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    for (auto r : suite[i].reports) {
      RunConfig cfg;
      cfg.method = to_string(r.method);
      cfg.k = kSuiteK;
      cfg.seed = i + 1;
      r.time_sec = 0.0;
      out.push_back(write_report(cfg, r));
    }
  }
  return out;
}

Outcome criterion9(const std::vector<SuiteRun>& first) {
  Outcome o;
  const auto a = suite_reports(first);
  const auto b = suite_reports(run_suite());
  int differ = 0;
  for (std::size_t i = 0; i < a.size(); ++i) differ += a[i] != b[i];
  o.pass = a.size() == b.size() && differ == 0;
  o.detail = fmt::format("{} reports compared, {} differ", a.size(), differ);
  return o;
}

Outcome criterion10() {
  Outcome o;
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };
  const RunConfig cfg;
  expect(cfg.beta == 0.9, "beta default");
  expect(cfg.eps == 1e-5 && cfg.delta == 1e-5, "eps/delta defaults");
  const SolveOptions opt;
  expect(opt.eps == 1e-5 && opt.delta == 1e-5, "solver option defaults");
  expect(!cfg.gamma && !cfg.mu_bar, "gamma and mu_bar default to auto");

  // mu = (1, 2, 3, 4) as column means of a 2-scenario matrix, k = 2.
  ScenarioSet set;
  set.returns = Matrix{{0.0, 2.0, 2.0, 5.0}, {2.0, 2.0, 4.0, 3.0}};
  set.probs = Vector::Constant(2, 0.5);
  RunConfig run = cfg;
  run.k = 2;
  const auto inst = build_instance(run, set);
  expect(inst.beta == 0.9, "instance beta");
  expect(std::abs(inst.gamma - 10.0 / std::sqrt(4.0)) < 1e-15, "gamma = 10/sqrt(N)");
  expect((inst.probs.array() == 0.5).all(), "p_s = 1/S");
  const double expected_mu_bar = 0.3 * 1.5 + 0.7 * 3.5;  // 2.9
  expect(inst.n_side() == 1 && std::abs(-inst.side_b[0] - expected_mu_bar) < 1e-12 &&
             (inst.side_A.row(0).transpose() + Vector{{1.0, 2.0, 3.0, 4.0}}).cwiseAbs().maxCoeff() < 1e-12,
         "mu_bar = 0.3 mean(bottom k) + 0.7 mean(top k)");
  expect(std::abs(compute_mu_bar(Vector{{0.0, 10.0}}, 1) - 7.0) < 1e-12, "mu_bar on (0, 10), k = 1");
  expect(std::abs(auto_gamma(25) - 2.0) < 1e-15 && std::abs(auto_gamma(100) - 1.0) < 1e-15, "auto gamma values");

  const auto uniform = Instance::from_scenarios(Matrix::Zero(8, 3), 0.9, 1.0, 1);
  expect((uniform.probs.array() == 0.125).all(), "from_scenarios uses 1/S");

  o.pass = failures.empty();
  o.detail = failures.empty() ? "beta 0.9, eps = delta = 1e-5, p_s = 1/S, gamma 10/sqrt(N), mu_bar rule"
                              : fmt::format("failed: {}", fmt::join(failures, "; "));
  return o;
}

}  // namespace
}  // namespace cvarcut

int main() {
  using namespace cvarcut;
  spdlog::set_level(spdlog::level::err);

  std::map<int, Outcome> results;
  auto run = [&](int id, const std::function<Outcome()>& check) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    results[id] = o;
    std::printf("criterion %d: %s (%.1fs) %s\n", id, o.pass ? "PASS" : "FAIL", seconds_since(start), o.detail.c_str());
    std::fflush(stdout);
  };

  std::vector<SuiteRun> suite;
  run(1, [&] {
    suite = run_suite();
    return criterion1(suite);
  });
  run(2, criterion2);
  run(3, criterion3);
  run(4, criterion4);
  run(5, criterion5);
  run(6, [&] { return suite.empty() ? Outcome{false, "suite did not run"} : criterion6(suite); });
  run(7, criterion7);
  run(8, criterion8);
  run(9, [&] { return suite.empty() ? Outcome{false, "suite did not run"} : criterion9(suite); });
  run(10, criterion10);

  int failed = 0;
  for (const auto& [id, o] : results) failed += !o.pass;
  std::printf("acceptance: %d/%zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
  return failed == 0 ? 0 : 1;
}
