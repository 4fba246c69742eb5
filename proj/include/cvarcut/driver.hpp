#pragma once

// Outer algorithms: the bilevel cutting plane (multi- and single-tree), the
// upper-level cutting plane with exact lower solves, and a big-M
// branch-and-bound baseline.

#include "cvarcut/master.hpp"
#include "cvarcut/model.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cvarcut {

enum class Method { Bcp, BcpSingleTree, Cp, BigM, Oracle };
enum class Status { Optimal, TimeLimit, Infeasible };

const char* to_string(Method method);
const char* to_string(Status status);
/// Accepts the report names ("bcp", "bcp_single_tree", ...) and the CLI alias "bcpc".
Method parse_method(std::string_view name);
Status parse_status(std::string_view name);

struct SolveOptions {
  double eps = 1e-5;
  double delta = 1e-5;
  double time_limit = 3600.0;  // seconds
};

/// Bounds after one outer iteration (or one lazy-callback call).
struct TraceEntry {
  int iteration = 0;
  double lower = 0.0;
  double upper = 0.0;
  Selection z;
};

struct SolveReport {
  Method method = Method::Bcp;
  Status status = Status::Infeasible;
  double obj = 0.0;  // +inf when no feasible selection was found
  double lower_bound = 0.0;
  double gap_pct = 0.0;
  double time_sec = 0.0;
  int iterations = 0;
  long nodes = 0;
  int n_cuts = 0;
  Selection selection;
  Portfolio portfolio;
  double cvar = 0.0;
  double var = 0.0;
  double expected_return = 0.0;

  // Parameter echo.
  int n_assets = 0;
  int n_scenarios = 0;
  int k = 0;
  double beta = 0.0;
  double gamma = 0.0;
  SolveOptions options;

  std::vector<TraceEntry> trace;  // not serialized
  std::vector<Cut> cuts;          // not serialized
};

/// f_delta(1_N) - delta from the scenario cutting plane; nullopt when even
/// the full support cannot meet the side constraints.
std::optional<double> theta_lb(const Instance& instance, double delta);

SolveReport solve_bcp(const Instance& instance, const SolveOptions& options, bool single_tree = false);
SolveReport solve_cp(const Instance& instance, const SolveOptions& options);
SolveReport solve_bigm(const Instance& instance, const SolveOptions& options);

/// Exact lower-level portfolio at z_hat; nullopt when supp(z_hat) cannot meet X.
std::optional<Portfolio> extract_portfolio(const Selection& z_hat, const Instance& instance);

/// 100 (obj - lower) / max(|obj|, 1e-12), clamped at zero.
double gap_percent(double obj, double lower);

/// Fills obj, selection, portfolio, risk figures and parameter echo from z_hat.
void finalize_report(SolveReport& report, const std::optional<Selection>& z_hat, const Instance& instance);

}  // namespace cvarcut
