#include "cvarcut/master.hpp"

#include "cvarcut/numeric/simplex.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <queue>

namespace cvarcut {

Cut Cut::optimality(double f0, Vector g, Selection z0) {
  if (static_cast<std::size_t>(g.size()) != z0.size()) throw ParameterError("cut gradient length differs from z0");
  if (g.size() > 0 && g.maxCoeff() > 0.0) throw ParameterError("optimality cut gradient must be nonpositive");
  Cut c;
  c.kind = CutKind::Optimality;
  c.intercept = f0;
  c.grad = std::move(g);
  c.origin = std::move(z0);
  return c;
}

Cut Cut::no_good(Selection z0) {
  Cut c;
  c.kind = CutKind::NoGood;
  c.grad = Vector::Zero(static_cast<Eigen::Index>(z0.size()));
  c.origin = std::move(z0);
  return c;
}

double Cut::value_at(const Selection& z) const {
  double v = intercept;
  for (std::size_t n = 0; n < z.size(); ++n)
    v += grad[static_cast<Eigen::Index>(n)] * (static_cast<double>(z[n]) - static_cast<double>(origin[n]));
  return v;
}

bool Cut::admits(const Selection& z) const { return kind != CutKind::NoGood || z != origin; }

double MasterState::theta_at(const Selection& z) const {
  double theta = theta_lb;
  for (const auto& c : cuts)
    if (c.kind == CutKind::Optimality) theta = std::max(theta, c.value_at(z));
  return theta;
}

void add_cut(MasterState& state, Cut cut) {
  if (static_cast<int>(cut.origin.size()) != state.n_assets) throw ParameterError("cut dimension differs from N");
  state.cuts.push_back(std::move(cut));
}

namespace {

using numeric::kInf;

// -1 free, 0 or 1 fixed.
using Fixing = std::vector<signed char>;

constexpr double kIntTol = 1e-6;

double prune_tol(double value) { return 1e-9 * (1.0 + std::abs(value)); }

struct NodeLp {
  bool feasible = false;
  double bound = 0.0;
  Vector z;
};

// Applies the cardinality propagation in place; false when the fixing is infeasible.
bool propagate(Fixing& fix, int k) {
  int ones = 0;
  for (auto f : fix) ones += f == 1;
  if (ones > k) return false;
  if (ones == k)
    for (auto& f : fix)
      if (f < 0) f = 0;
  return true;
}

NodeLp solve_node(const MasterState& state, Fixing fix) {
  NodeLp out;
  if (!propagate(fix, state.k)) return out;
  const auto n = static_cast<Eigen::Index>(state.n_assets);
  const auto rows = static_cast<Eigen::Index>(state.cuts.size()) + 1;
  numeric::LinearProgram lp;
  lp.cost = Vector::Zero(n + 1);
  lp.cost[n] = 1.0;
  lp.rows = Matrix::Zero(rows, n + 1);
  lp.row_lo = Vector::Constant(rows, -kInf);
  lp.row_hi = Vector::Constant(rows, kInf);
  Eigen::Index r = 0;
  for (const auto& c : state.cuts) {
    if (c.kind == CutKind::Optimality) {
      lp.rows.row(r).head(n) = -c.grad.transpose();
      lp.rows(r, n) = 1.0;
      lp.row_lo[r] = c.intercept - c.grad.dot(c.origin.as_vector());
    } else {
      int ones = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const bool on = c.origin[static_cast<std::size_t>(i)];
        lp.rows(r, i) = on ? 1.0 : -1.0;
        ones += on;
      }
      lp.row_hi[r] = ones - 1.0;
    }
    ++r;
  }
  lp.rows.row(r).head(n).setOnes();
  lp.row_hi[r] = state.k;

  lp.col_lo = Vector::Zero(n + 1);
  lp.col_hi = Vector::Ones(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto f = fix[static_cast<std::size_t>(i)];
    if (f >= 0) lp.col_lo[i] = lp.col_hi[i] = f;
  }
  lp.col_lo[n] = state.theta_lb;
  lp.col_hi[n] = kInf;

  const auto sol = numeric::solve_lp(lp);
  if (sol.status == numeric::LpStatus::IterLimit) throw SolverError("master LP iteration limit");
  if (sol.status != numeric::LpStatus::Optimal) return out;
  out.feasible = true;
  out.bound = sol.x[n];
  out.z = sol.x.head(n);
  return out;
}

std::optional<Selection> as_integral(const Vector& z) {
  Selection out(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double r = std::round(z[i]);
    if (std::abs(z[i] - r) > kIntTol) return std::nullopt;
    out.set(static_cast<std::size_t>(i), r > 0.5);
  }
  return out;
}

bool admissible(const MasterState& state, const Selection& z) {
  if (z.count() > state.k) return false;
  for (const auto& c : state.cuts)
    if (!c.admits(z)) return false;
  return true;
}

// Most fractional entry, ties to the lowest index.
Eigen::Index branch_index(const Vector& z) {
  Eigen::Index best = -1;
  double best_dist = 1.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double frac = z[i] - std::floor(z[i]);
    if (frac <= kIntTol || frac >= 1.0 - kIntTol) continue;
    const double dist = std::abs(frac - 0.5);
    if (dist < best_dist - 1e-12) {
      best_dist = dist;
      best = i;
    }
  }
  return best;
}

struct Node {
  Fixing fix;
  double bound;
  long id;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

using NodeQueue = std::priority_queue<Node, std::vector<Node>, NodeOrder>;

bool past(const std::optional<Clock::time_point>& deadline) { return deadline && Clock::now() >= *deadline; }

// Depth-first search in lexicographic order for the smallest admissible z
// with theta_at(z) <= target.
std::optional<Selection> lex_smallest(const MasterState& state, Fixing& fix, std::size_t i, double target,
                                      long& nodes) {
  ++nodes;
  const auto lp = solve_node(state, fix);
  if (!lp.feasible || lp.bound > target) return std::nullopt;
  if (i == fix.size()) {
    Selection z(fix.size());
    for (std::size_t j = 0; j < fix.size(); ++j) z.set(j, fix[j] == 1);
    if (admissible(state, z) && state.theta_at(z) <= target) return z;
    return std::nullopt;
  }
  const auto saved = fix[i];
  for (signed char v : {0, 1}) {
    if (saved >= 0 && saved != v) continue;
    fix[i] = v;
    if (auto z = lex_smallest(state, fix, i + 1, target, nodes)) {
      fix[i] = saved;
      return z;
    }
  }
  fix[i] = saved;
  return std::nullopt;
}

}  // namespace

MasterResult master_solve(MasterState& state, const MasterOptions& options) {
  if (state.n_assets < 1 || state.k < 0) throw ParameterError("master: invalid dimensions");
  if (!std::isfinite(state.theta_lb)) throw ParameterError("master: theta_lb must be finite");

  MasterResult result;
  std::optional<Selection> incumbent;
  double inc_val = kInf;
  NodeQueue open;
  long next_id = 0;
  open.push({Fixing(static_cast<std::size_t>(state.n_assets), -1), -kInf, next_id++});

  while (!open.empty()) {
    Node node = open.top();
    open.pop();
    if (node.bound >= inc_val - prune_tol(inc_val)) continue;
    if (past(options.deadline)) {
      result.status = MasterStatus::TimeLimit;
      result.bound = std::min(node.bound, inc_val);
      if (incumbent) {
        result.z = *incumbent;
        result.theta = inc_val;
      }
      state.node_count += result.nodes;
      return result;
    }
    if (++result.nodes > options.node_limit) {
      state.node_count += result.nodes;
      throw NodeLimitError(incumbent, inc_val);
    }

    const auto lp = solve_node(state, node.fix);
    if (!lp.feasible || lp.bound >= inc_val - prune_tol(inc_val)) continue;
    if (auto z = as_integral(lp.z); z && admissible(state, *z)) {
      const double value = state.theta_at(*z);
      if (value < inc_val) {
        inc_val = value;
        incumbent = *z;
      }
      continue;
    }
    const auto j = branch_index(lp.z);
    if (j < 0) {
      // Integral but rejected by a no-good row within tolerance; should not happen.
      spdlog::warn("master: integral LP point violates a no-good cut, pruning node");
      continue;
    }
    for (signed char v : {0, 1}) {
      Node child{node.fix, lp.bound, next_id++};
      child.fix[static_cast<std::size_t>(j)] = v;
      open.push(std::move(child));
    }
  }

  if (!incumbent) {
    state.node_count += result.nodes;
    result.status = MasterStatus::Infeasible;
    return result;
  }

  // Among all optimal points pick the lexicographically smallest.
  Fixing fix(static_cast<std::size_t>(state.n_assets), -1);
  long polish_nodes = 0;
  auto lex = lex_smallest(state, fix, 0, inc_val + prune_tol(inc_val), polish_nodes);
  result.nodes += polish_nodes;
  state.node_count += result.nodes;
  result.status = MasterStatus::Optimal;
  result.z = lex ? *lex : *incumbent;
  result.theta = state.theta_at(result.z);
  result.bound = result.theta;
  return result;
}

std::optional<double> master_relaxation_bound(const MasterState& state) {
  const auto lp = solve_node(state, Fixing(static_cast<std::size_t>(state.n_assets), -1));
  if (!lp.feasible) return std::nullopt;
  return lp.bound;
}

MasterResult master_solve_single_tree(MasterState& state, const LazyCallback& callback,
                                      const SingleTreeOptions& options) {
  if (state.n_assets < 1 || state.k < 0) throw ParameterError("master: invalid dimensions");
  if (!std::isfinite(state.theta_lb)) throw ParameterError("master: theta_lb must be finite");
  const auto upper = [&] { return options.upper_bound ? options.upper_bound() : kInf; };

  MasterResult result;
  std::optional<Selection> accepted;
  double accepted_val = kInf;
  double pruned_min = kInf;  // smallest bound among nodes cut off by the global upper bound
  NodeQueue open;
  long next_id = 0;
  open.push({Fixing(static_cast<std::size_t>(state.n_assets), -1), -kInf, next_id++});

  auto finish = [&](MasterStatus status, double open_min) {
    state.node_count += result.nodes;
    result.status = status;
    result.bound = std::min({accepted_val, pruned_min, open_min});
    if (accepted) {
      result.z = *accepted;
      result.theta = accepted_val;
    }
    return result;
  };

  while (!open.empty()) {
    Node node = open.top();
    open.pop();
    const double ub = upper();
    if (node.bound >= ub - options.eps) {
      pruned_min = std::min(pruned_min, node.bound);
      continue;
    }
    if (node.bound >= accepted_val - prune_tol(accepted_val)) continue;
    if (past(options.master.deadline)) return finish(MasterStatus::TimeLimit, node.bound);
    if (++result.nodes > options.master.node_limit) {
      state.node_count += result.nodes;
      throw NodeLimitError(accepted, accepted_val);
    }

    for (;;) {
      const auto lp = solve_node(state, node.fix);
      if (!lp.feasible) break;
      if (lp.bound >= upper() - options.eps) {
        pruned_min = std::min(pruned_min, lp.bound);
        break;
      }
      if (auto z = as_integral(lp.z); z && admissible(state, *z)) {
        if (callback(*z, state)) continue;  // new cuts: re-solve this node
        const double value = state.theta_at(*z);
        if (value < accepted_val) {
          accepted_val = value;
          accepted = *z;
        }
        break;
      }
      const auto j = branch_index(lp.z);
      if (j < 0) {
        spdlog::warn("master: integral LP point violates a no-good cut, pruning node");
        break;
      }
      for (signed char v : {0, 1}) {
        Node child{node.fix, lp.bound, next_id++};
        child.fix[static_cast<std::size_t>(j)] = v;
        open.push(std::move(child));
      }
      break;
    }
  }
  if (!accepted && pruned_min == kInf) return finish(MasterStatus::Infeasible, kInf);
  return finish(MasterStatus::Optimal, kInf);
}

}  // namespace cvarcut
