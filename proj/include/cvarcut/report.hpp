#pragma once

// Run configuration and the structured (JSON) solve report.

#include "cvarcut/driver.hpp"
#include "cvarcut/ingest.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace cvarcut {

inline constexpr double kDefaultBeta = 0.9;
inline constexpr double kDefaultTolerance = 1e-5;  // eps and delta
inline constexpr double kDefaultTimeLimit = 3600.0;

/// gamma = 10 / sqrt(N).
double auto_gamma(int n_assets);

struct RunConfig {
  std::string method = "bcp";
  int k = 10;
  std::optional<double> gamma;  // nullopt: auto_gamma(N)
  double beta = kDefaultBeta;
  double eps = kDefaultTolerance;
  double delta = kDefaultTolerance;
  std::uint64_t seed = 0;
  double time_limit_sec = kDefaultTimeLimit;
  double scale = 1.0;
  std::optional<double> mu_bar;  // nullopt: compute_mu_bar with k
  std::string scenarios_path;
  std::string report_path;

  bool operator==(const RunConfig&) const = default;

  SolveOptions solve_options() const { return {eps, delta, time_limit_sec}; }
};

/// Instance from scenarios with gamma, beta, k and the return floor resolved.
Instance build_instance(const RunConfig& config, const ScenarioSet& scenarios);

/// Runs config.method on the instance.
SolveReport run_method(const RunConfig& config, const Instance& instance);

/// Deterministic JSON document; non-finite numbers are written as null.
std::string write_report(const RunConfig& config, const SolveReport& report);

struct ParsedReport {
  RunConfig config;
  SolveReport report;
};

/// Inverse of write_report (trace and cuts are not part of the document).
ParsedReport parse_report(std::string_view text);

}  // namespace cvarcut
