#include "cvarcut/driver.hpp"

#include "cvarcut/errors.hpp"
#include "cvarcut/lower.hpp"
#include "cvarcut/numeric/convex_program.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <limits>
#include <queue>
#include <unordered_set>

namespace cvarcut {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Clock::time_point deadline_after(Clock::time_point start, double seconds) {
  // Guard against overflow for huge limits.
  const double capped = std::min(seconds, 1e9);
  return start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(capped));
}

void check_options(const SolveOptions& options) {
  if (!(options.eps >= 0.0) || !(options.delta >= 0.0)) throw ParameterError("eps and delta must be nonnegative");
  if (!(options.time_limit >= 0.0)) throw ParameterError("time limit must be nonnegative");
}

SolveReport start_report(Method method, const Instance& instance, const SolveOptions& options) {
  instance.validate();
  check_options(options);
  SolveReport r;
  r.method = method;
  r.n_assets = instance.n_assets();
  r.n_scenarios = instance.n_scenarios();
  r.k = instance.k;
  r.beta = instance.beta;
  r.gamma = instance.gamma;
  r.options = options;
  return r;
}

// Bookkeeping shared by the outer loops: bounds, incumbent, visited selections.
struct Bounds {
  double lower = -kInf;
  double upper = kInf;
  std::optional<Selection> incumbent;

  void offer(const Selection& z, double value) {
    if (value < upper) {
      upper = value;
      incumbent = z;
    }
  }
};

}  // namespace

const char* to_string(Method method) {
  switch (method) {
    case Method::Bcp: return "bcp";
    case Method::BcpSingleTree: return "bcp_single_tree";
    case Method::Cp: return "cp";
    case Method::BigM: return "bigm";
    case Method::Oracle: return "oracle";
  }
  return "?";
}

const char* to_string(Status status) {
  switch (status) {
    case Status::Optimal: return "Optimal";
    case Status::TimeLimit: return "TimeLimit";
    case Status::Infeasible: return "Infeasible";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "bcp") return Method::Bcp;
  if (name == "bcpc" || name == "bcp_single_tree") return Method::BcpSingleTree;
  if (name == "cp") return Method::Cp;
  if (name == "bigm") return Method::BigM;
  if (name == "oracle") return Method::Oracle;
  throw ParameterError("unknown method '" + std::string(name) + "'");
}

Status parse_status(std::string_view name) {
  if (name == "Optimal") return Status::Optimal;
  if (name == "TimeLimit") return Status::TimeLimit;
  if (name == "Infeasible") return Status::Infeasible;
  throw ParameterError("unknown status '" + std::string(name) + "'");
}

double gap_percent(double obj, double lower) {
  if (!std::isfinite(obj) || !std::isfinite(lower)) return kInf;
  return std::max(0.0, 100.0 * (obj - lower) / std::max(std::abs(obj), 1e-12));
}

std::optional<Portfolio> extract_portfolio(const Selection& z_hat, const Instance& instance) {
  auto lifted = solve_lower_lifted(z_hat, instance);
  if (!lifted) return std::nullopt;
  return lifted->portfolio;
}

void finalize_report(SolveReport& report, const std::optional<Selection>& z_hat, const Instance& instance) {
  report.obj = kInf;
  report.selection = Selection(static_cast<std::size_t>(instance.n_assets()));
  report.portfolio = Portfolio{Vector::Zero(instance.n_assets()), 0.0, 0.0};
  if (z_hat) {
    auto portfolio = extract_portfolio(*z_hat, instance);
    if (!portfolio) throw SolverError("incumbent selection became infeasible on re-solve");
    report.selection = *z_hat;
    report.portfolio = *portfolio;
    report.obj = objective(*portfolio, instance);
    const auto risk = cvar(portfolio->weights, instance);
    report.var = risk.var;
    report.cvar = risk.cvar;
    report.expected_return = instance.expected_returns().dot(portfolio->weights);
  }
  report.gap_pct = gap_percent(report.obj, report.lower_bound);
}

std::optional<double> theta_lb(const Instance& instance, double delta) {
  const auto full = solve_lower_cp(Selection::all(static_cast<std::size_t>(instance.n_assets())), instance, delta);
  if (!full) return std::nullopt;
  return full->f_lo - delta;
}

namespace {

// Outer cutting-plane loop; the master is re-solved from scratch each iteration.
void bcp_multi_tree(SolveReport& report, MasterState& state, Bounds& bounds, const Instance& instance,
                    const SolveOptions& options, Clock::time_point start) {
  const auto deadline = deadline_after(start, options.time_limit);
  std::unordered_set<Selection, SelectionHash> visited;
  for (int t = 1;; ++t) {
    if (t > 1 && Clock::now() >= deadline) {
      report.status = Status::TimeLimit;
      return;
    }
    MasterOptions mopt;
    if (t > 1) mopt.deadline = deadline;
    const auto master = master_solve(state, mopt);
    report.iterations = t;
    if (master.status == MasterStatus::TimeLimit) {
      report.status = Status::TimeLimit;
      return;
    }
    if (master.status == MasterStatus::Infeasible) {
      // Every admissible selection carries a no-good cut.
      report.status = bounds.incumbent ? Status::Optimal : Status::Infeasible;
      return;
    }
    bounds.lower = std::max(bounds.lower, master.theta);
    const auto& z = master.z;
    // A repeated z would reproduce its earlier cut, so stop before re-solving.
    if (bounds.upper - bounds.lower <= options.eps || !visited.insert(z).second) {
      report.trace.push_back({t, bounds.lower, bounds.upper, z});
      report.status = Status::Optimal;
      return;
    }
    const auto lower = solve_lower_cp(z, instance, options.delta);
    if (!lower) {
      add_cut(state, Cut::no_good(z));
    } else {
      add_cut(state, Cut::optimality(lower->f_lo, subgradient(lower->certificate, instance.gamma), z));
      bounds.offer(z, lower->f_hi);
    }
    report.trace.push_back({t, bounds.lower, bounds.upper, z});
    spdlog::debug("bcp iter {}: LB {:.10g} UB {:.10g} z {}", t, bounds.lower, bounds.upper, z.to_string());
    if (bounds.upper - bounds.lower <= options.eps) {
      report.status = Status::Optimal;
      return;
    }
  }
}

// The same cuts injected lazily into a single branch-and-bound tree.
void bcp_single_tree(SolveReport& report, MasterState& state, Bounds& bounds, const Instance& instance,
                     const SolveOptions& options, Clock::time_point start) {
  std::unordered_set<Selection, SelectionHash> visited;
  int calls = 0;
  auto callback = [&](const Selection& z, MasterState& st) {
    ++calls;
    if (!visited.insert(z).second) return false;
    const auto lower = solve_lower_cp(z, instance, options.delta);
    if (!lower) {
      add_cut(st, Cut::no_good(z));
    } else {
      add_cut(st, Cut::optimality(lower->f_lo, subgradient(lower->certificate, instance.gamma), z));
      bounds.offer(z, lower->f_hi);
    }
    report.trace.push_back({calls, bounds.lower, bounds.upper, z});
    return true;
  };
  SingleTreeOptions sopt;
  sopt.master.deadline = deadline_after(start, options.time_limit);
  sopt.eps = options.eps;
  sopt.upper_bound = [&] { return bounds.upper; };
  const auto result = master_solve_single_tree(state, callback, sopt);
  report.iterations = calls;
  bounds.lower = std::max(bounds.lower, std::min(result.bound, bounds.upper));
  if (result.status == MasterStatus::TimeLimit) {
    report.status = Status::TimeLimit;
  } else {
    report.status = bounds.incumbent ? Status::Optimal : Status::Infeasible;
  }
}

}  // namespace

SolveReport solve_bcp(const Instance& instance, const SolveOptions& options, bool single_tree) {
  const auto start = Clock::now();
  auto report = start_report(single_tree ? Method::BcpSingleTree : Method::Bcp, instance, options);
  const auto n = static_cast<std::size_t>(instance.n_assets());

  Bounds bounds;
  const auto full = solve_lower_cp(Selection::all(n), instance, options.delta);
  if (!full) {
    report.status = Status::Infeasible;
    report.lower_bound = kInf;
    finalize_report(report, std::nullopt, instance);
    report.time_sec = seconds_since(start);
    return report;
  }
  MasterState state;
  state.n_assets = instance.n_assets();
  state.k = instance.k;
  state.theta_lb = full->f_lo - options.delta;
  bounds.lower = state.theta_lb;
  // The certificate at 1_N is already paid for; its cut is valid everywhere.
  add_cut(state, Cut::optimality(full->f_lo, subgradient(full->certificate, instance.gamma), Selection::all(n)));
  if (instance.k >= instance.n_assets()) bounds.offer(Selection::all(n), full->f_hi);

  if (single_tree)
    bcp_single_tree(report, state, bounds, instance, options, start);
  else
    bcp_multi_tree(report, state, bounds, instance, options, start);

  report.nodes = state.node_count;
  report.n_cuts = static_cast<int>(state.cuts.size());
  report.cuts = state.cuts;
  report.lower_bound = report.status == Status::Infeasible ? kInf : bounds.lower;
  finalize_report(report, bounds.incumbent, instance);
  report.time_sec = seconds_since(start);
  return report;
}

SolveReport solve_cp(const Instance& instance, const SolveOptions& options) {
  const auto start = Clock::now();
  const auto deadline = deadline_after(start, options.time_limit);
  auto report = start_report(Method::Cp, instance, options);
  const auto n = static_cast<std::size_t>(instance.n_assets());

  // Exact cut from a lifted solve: the dual objective is linear in z for
  // fixed multipliers, so f0 + g^T (z - z0) is that dual value at z.
  auto exact_cut = [&](const LiftedResult& r, const Selection& z) {
    const double f0 = lifted_dual_objective(r.alpha, r.zeta, r.lambda, z, instance);
    return Cut::optimality(f0, -0.5 * instance.gamma * r.omega.cwiseAbs2(), z);
  };

  Bounds bounds;
  const auto full = solve_lower_lifted(Selection::all(n), instance);
  if (!full) {
    report.status = Status::Infeasible;
    report.lower_bound = kInf;
    finalize_report(report, std::nullopt, instance);
    report.time_sec = seconds_since(start);
    return report;
  }
  MasterState state;
  state.n_assets = instance.n_assets();
  state.k = instance.k;
  add_cut(state, exact_cut(*full, Selection::all(n)));
  state.theta_lb = state.cuts.back().intercept;
  bounds.lower = state.theta_lb;
  if (instance.k >= instance.n_assets()) bounds.offer(Selection::all(n), full->f);

  std::unordered_set<Selection, SelectionHash> visited;
  for (int t = 1;; ++t) {
    if (t > 1 && Clock::now() >= deadline) {
      report.status = Status::TimeLimit;
      break;
    }
    MasterOptions mopt;
    if (t > 1) mopt.deadline = deadline;
    const auto master = master_solve(state, mopt);
    report.iterations = t;
    if (master.status == MasterStatus::TimeLimit) {
      report.status = Status::TimeLimit;
      break;
    }
    if (master.status == MasterStatus::Infeasible) {
      report.status = bounds.incumbent ? Status::Optimal : Status::Infeasible;
      break;
    }
    bounds.lower = std::max(bounds.lower, master.theta);
    const auto& z = master.z;
    if (bounds.upper - bounds.lower <= options.eps) {
      report.trace.push_back({t, bounds.lower, bounds.upper, z});
      report.status = Status::Optimal;
      break;
    }
    if (!visited.insert(z).second) {
      // Exact cuts make a repeat imply UB - LB within solver accuracy.
      spdlog::warn("cp: selection {} repeated with gap {:.3g}; stopping", z.to_string(), bounds.upper - bounds.lower);
      report.trace.push_back({t, bounds.lower, bounds.upper, z});
      report.status = Status::Optimal;
      break;
    }
    const auto lifted = solve_lower_lifted(z, instance);
    if (!lifted) {
      add_cut(state, Cut::no_good(z));
    } else {
      add_cut(state, exact_cut(*lifted, z));
      bounds.offer(z, lifted->f);
    }
    report.trace.push_back({t, bounds.lower, bounds.upper, z});
    if (bounds.upper - bounds.lower <= options.eps) {
      report.status = Status::Optimal;
      break;
    }
  }

  report.nodes = state.node_count;
  report.n_cuts = static_cast<int>(state.cuts.size());
  report.cuts = state.cuts;
  report.lower_bound = report.status == Status::Infeasible ? kInf : bounds.lower;
  finalize_report(report, bounds.incumbent, instance);
  report.time_sec = seconds_since(start);
  return report;
}

namespace {

// -1 free, 0 or 1 fixed.
using Fixing = std::vector<signed char>;

constexpr double kSupportTol = 1e-6;
constexpr numeric::IpmOptions kNodeIpm{1e-10, 300, 1e-8};

struct BigmNode {
  Fixing fix;
  double bound;
  long id;
};

struct BigmOrder {
  bool operator()(const BigmNode& a, const BigmNode& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

struct Relaxation {
  bool feasible = false;
  double bound = 0.0;
  Vector x;  // length N, zero on fixed-out assets
};

// Node relaxation over (x_support, z_free, a, q):
//   min 1/(2 gamma) x^T x + a + 1/(1-beta) p^T q
//   s.t. q >= -R x - a, q >= 0, A x <= b, 1^T x = 1, x >= 0,
//        x_j <= z_j, 0 <= z_j <= 1 (free j), sum z_free <= k - #ones.
Relaxation relax(const Fixing& fix, const Instance& inst) {
  std::vector<int> support, free;
  int ones = 0;
  for (int i = 0; i < inst.n_assets(); ++i) {
    const auto f = fix[static_cast<std::size_t>(i)];
    if (f != 0) support.push_back(i);
    if (f < 0) free.push_back(i);
    ones += f == 1;
  }
  Relaxation out;
  if (support.empty()) return out;
  const auto d = static_cast<Eigen::Index>(support.size());
  const auto nf = static_cast<Eigen::Index>(free.size());
  const auto s = static_cast<Eigen::Index>(inst.n_scenarios());
  const auto m_side = static_cast<Eigen::Index>(inst.n_side());
  const Eigen::Index ia = d + nf;
  const Eigen::Index iq = ia + 1;
  const Eigen::Index nv = iq + s;
  const Eigen::Index rows = 2 * s + m_side + d + 3 * nf + (nf > 0 ? 1 : 0);

  numeric::ConvexProgram prog;
  prog.quad_diag = Vector::Zero(nv);
  prog.quad_diag.head(d).setConstant(1.0 / inst.gamma);
  prog.lin = Vector::Zero(nv);
  prog.lin[ia] = 1.0;
  prog.lin.tail(s) = inst.probs / (1.0 - inst.beta);
  prog.ineq_G = Matrix::Zero(rows, nv);
  prog.ineq_h = Vector::Zero(rows);
  Eigen::Index r = 0;
  for (std::size_t j = 0; j < support.size(); ++j)
    prog.ineq_G.block(r, static_cast<Eigen::Index>(j), s, 1) = -inst.scenarios.col(support[j]);
  prog.ineq_G.block(r, ia, s, 1).setConstant(-1.0);
  prog.ineq_G.block(r, iq, s, s) = -Matrix::Identity(s, s);
  r += s;
  prog.ineq_G.block(r, iq, s, s) = -Matrix::Identity(s, s);
  r += s;
  for (std::size_t j = 0; j < support.size(); ++j)
    prog.ineq_G.block(r, static_cast<Eigen::Index>(j), m_side, 1) = inst.side_A.col(support[j]);
  prog.ineq_h.segment(r, m_side) = inst.side_b;
  r += m_side;
  prog.ineq_G.block(r, 0, d, d) = -Matrix::Identity(d, d);
  r += d;
  for (Eigen::Index f = 0; f < nf; ++f) {
    const auto pos = std::find(support.begin(), support.end(), free[static_cast<std::size_t>(f)]) - support.begin();
    prog.ineq_G(r, pos) = 1.0;
    prog.ineq_G(r, d + f) = -1.0;
    prog.ineq_G(r + nf, d + f) = -1.0;
    prog.ineq_G(r + 2 * nf, d + f) = 1.0;
    prog.ineq_h[r + 2 * nf] = 1.0;
    ++r;
  }
  r += 2 * nf;
  if (nf > 0) {
    prog.ineq_G.block(r, d, 1, nf).setOnes();
    prog.ineq_h[r] = inst.k - ones;
  }
  prog.eq_A = Matrix::Zero(1, nv);
  prog.eq_A.block(0, 0, 1, d).setOnes();
  prog.eq_b = Vector::Ones(1);

  const auto sol = numeric::solve(prog, kNodeIpm);
  if (sol.status == numeric::SolveStatus::Infeasible) return out;
  if (sol.status != numeric::SolveStatus::Optimal)
    throw SolverError(std::string("big-M node relaxation: ") + numeric::to_string(sol.status));
  out.feasible = true;
  out.bound = sol.obj;
  out.x = Vector::Zero(inst.n_assets());
  for (std::size_t j = 0; j < support.size(); ++j) out.x[support[j]] = sol.x[static_cast<Eigen::Index>(j)];
  return out;
}

}  // namespace

SolveReport solve_bigm(const Instance& instance, const SolveOptions& options) {
  const auto start = Clock::now();
  const auto deadline = deadline_after(start, options.time_limit);
  auto report = start_report(Method::BigM, instance, options);
  const auto n = instance.n_assets();

  Bounds bounds;
  double pruned_min = kInf;
  std::priority_queue<BigmNode, std::vector<BigmNode>, BigmOrder> open;
  long next_id = 0;
  open.push({Fixing(static_cast<std::size_t>(n), -1), -kInf, next_id++});
  report.status = Status::Optimal;

  while (!open.empty()) {
    auto node = open.top();
    open.pop();
    if (node.bound >= bounds.upper - options.eps) {
      pruned_min = std::min(pruned_min, node.bound);
      continue;
    }
    if (Clock::now() >= deadline) {
      report.status = Status::TimeLimit;
      pruned_min = std::min(pruned_min, node.bound);
      break;
    }
    ++report.nodes;

    int ones = 0;
    for (auto f : node.fix) ones += f == 1;
    if (ones == instance.k)
      for (auto& f : node.fix)
        if (f < 0) f = 0;

    const auto rel = relax(node.fix, instance);
    if (!rel.feasible) continue;
    if (rel.bound >= bounds.upper - options.eps) {
      pruned_min = std::min(pruned_min, rel.bound);
      continue;
    }
    // Integral when the relaxed support fits the cardinality budget.
    Selection z(static_cast<std::size_t>(n));
    int count = 0;
    for (int i = 0; i < n; ++i) {
      const auto f = node.fix[static_cast<std::size_t>(i)];
      const bool on = f == 1 || (f < 0 && rel.x[i] > kSupportTol);
      z.set(static_cast<std::size_t>(i), on);
      count += on;
    }
    if (count <= instance.k) {
      if (const auto exact = solve_lower_lifted(z, instance)) {
        bounds.offer(z, exact->f);
        pruned_min = std::min(pruned_min, rel.bound);
        continue;
      }
      // The rounded support lost feasibility through tiny weights; branch instead.
    }
    int j = -1;
    for (int i = 0; i < n; ++i)
      if (node.fix[static_cast<std::size_t>(i)] < 0 && (j < 0 || rel.x[i] > rel.x[j])) j = i;
    if (j < 0) continue;
    for (signed char v : {1, 0}) {
      BigmNode child{node.fix, rel.bound, next_id++};
      child.fix[static_cast<std::size_t>(j)] = v;
      open.push(std::move(child));
    }
  }
  if (report.status == Status::TimeLimit)
    while (!open.empty()) {
      pruned_min = std::min(pruned_min, open.top().bound);
      open.pop();
    }
  if (report.status == Status::Optimal && !bounds.incumbent) report.status = Status::Infeasible;

  report.iterations = static_cast<int>(report.nodes);
  report.lower_bound = report.status == Status::Infeasible ? kInf : std::min(pruned_min, bounds.upper);
  finalize_report(report, bounds.incumbent, instance);
  report.time_sec = seconds_since(start);
  return report;
}

}  // namespace cvarcut
