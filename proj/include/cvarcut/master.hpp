#pragma once

// Master problem: min theta over z in {0,1}^N, 1^T z <= k, subject to a lower
// bound on theta and accumulated optimality / no-good cuts.

#include "cvarcut/errors.hpp"
#include "cvarcut/model.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <vector>

namespace cvarcut {

enum class CutKind { Optimality, NoGood };

struct Cut {
  CutKind kind = CutKind::Optimality;
  double intercept = 0.0;  // f0, optimality cuts only
  Vector grad;             // g, optimality cuts only
  Selection origin;        // z0

  /// theta >= f0 + g^T (z - z0). Throws ParameterError if any g_n > 0.
  static Cut optimality(double f0, Vector g, Selection z0);
  /// sum_{z0_n = 1} z_n - sum_{z0_n = 0} z_n <= |z0| - 1, which removes z0 only.
  static Cut no_good(Selection z0);

  /// f0 + g^T (z - z0) for optimality cuts.
  double value_at(const Selection& z) const;
  /// True unless this is a no-good cut for z.
  bool admits(const Selection& z) const;
};

struct MasterState {
  std::vector<Cut> cuts;
  double theta_lb = 0.0;
  int n_assets = 0;
  int k = 0;
  long node_count = 0;

  /// max(theta_lb, optimality cut values at z).
  double theta_at(const Selection& z) const;
};

void add_cut(MasterState& state, Cut cut);

using Clock = std::chrono::steady_clock;

struct MasterOptions {
  long node_limit = 1'000'000;
  std::optional<Clock::time_point> deadline;
};

enum class MasterStatus { Optimal, Infeasible, TimeLimit };

struct MasterResult {
  MasterStatus status = MasterStatus::Infeasible;
  Selection z;        // optimizer, or best incumbent on TimeLimit (may be empty)
  double theta = 0.0;
  double bound = 0.0;  // proven lower bound on the master optimum
  long nodes = 0;
};

/// Thrown when branch-and-bound exceeds its node budget.
class NodeLimitError : public SolverError {
 public:
  NodeLimitError(std::optional<Selection> incumbent, double value)
      : SolverError("master branch-and-bound node limit reached"), incumbent_(std::move(incumbent)), value_(value) {}
  const std::optional<Selection>& incumbent() const { return incumbent_; }
  double value() const { return value_; }

 private:
  std::optional<Selection> incumbent_;
  double value_;
};

/// Exact solve by best-first branch-and-bound on the LP relaxation. Among
/// optimal z the lexicographically smallest (0 < 1 from the first asset) is
/// returned, with theta = state.theta_at(z).
MasterResult master_solve(MasterState& state, const MasterOptions& options = {});

/// Optimum of the LP relaxation (z in [0,1]^N) at the root; nullopt if infeasible.
std::optional<double> master_relaxation_bound(const MasterState& state);

/// Lazy-cut hook for single-tree mode, called at integral nodes. Returns true
/// when it appended cuts to `state`, which makes the node be re-solved.
using LazyCallback = std::function<bool(const Selection& z, MasterState& state)>;

struct SingleTreeOptions {
  MasterOptions master;
  double eps = 1e-5;
  /// Current global upper bound (typically maintained by the callback).
  std::function<double()> upper_bound;
};

/// One branch-and-bound tree in which integral nodes are handed to the lazy
/// callback. Nodes whose bound reaches upper_bound() - eps are pruned. On
/// return, `bound` is a valid lower bound on the optimum and `z`/`theta`
/// describe the best accepted integral node (if any).
MasterResult master_solve_single_tree(MasterState& state, const LazyCallback& callback,
                                      const SingleTreeOptions& options);

}  // namespace cvarcut
