#include "cvarcut/report.hpp"

#include "cvarcut/errors.hpp"
#include "cvarcut/oracle.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>

namespace cvarcut {

namespace {

using Json = nlohmann::ordered_json;

Json number(double value) { return std::isfinite(value) ? Json(value) : Json(nullptr); }

// null stands for a non-finite value; +inf is the only one the solvers produce.
double read_number(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

Json auto_or(const std::optional<double>& value) { return value ? Json(*value) : Json("auto"); }

std::optional<double> read_auto_or(const Json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "auto") throw ParseError(0, "expected a number or \"auto\"");
    return std::nullopt;
  }
  return j.get<double>();
}

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
  return out;
}

}  // namespace

double auto_gamma(int n_assets) {
  if (n_assets < 1) throw ParameterError("auto gamma needs at least one asset");
  return 10.0 / std::sqrt(static_cast<double>(n_assets));
}

Instance build_instance(const RunConfig& config, const ScenarioSet& scenarios) {
  const int n = static_cast<int>(scenarios.returns.cols());
  auto inst = Instance::from_scenarios(scenarios.returns, config.beta, config.gamma.value_or(auto_gamma(n)), config.k);
  inst.probs = scenarios.probs;
  inst.validate();
  const double mu_bar = config.mu_bar.value_or(compute_mu_bar(inst.expected_returns(), std::min(config.k, n)));
  return with_return_floor(inst, mu_bar);
}

SolveReport run_method(const RunConfig& config, const Instance& instance) {
  const auto options = config.solve_options();
  switch (parse_method(config.method)) {
    case Method::Bcp: return solve_bcp(instance, options);
    case Method::BcpSingleTree: return solve_bcp(instance, options, true);
    case Method::Cp: return solve_cp(instance, options);
    case Method::BigM: return solve_bigm(instance, options);
    case Method::Oracle: return solve_oracle(instance);
  }
  throw ParameterError("unknown method");
}

std::string write_report(const RunConfig& config, const SolveReport& report) {
  Json j;
  j["method"] = to_string(report.method);
  j["status"] = to_string(report.status);
  j["obj"] = number(report.obj);
  j["lower_bound"] = number(report.lower_bound);
  j["gap_pct"] = number(report.gap_pct);
  j["time_sec"] = number(report.time_sec);
  j["iterations"] = report.iterations;
  j["nodes"] = report.nodes;
  j["cuts"] = report.n_cuts;
  j["selection"] = report.selection.bits();
  j["weights"] = vector_json(report.portfolio.weights);
  j["a"] = number(report.portfolio.var_level);
  j["v"] = number(report.portfolio.cvar_excess);
  j["var"] = number(report.var);
  j["cvar"] = number(report.cvar);
  j["expected_return"] = number(report.expected_return);
  j["instance"] = {
      {"n_assets", report.n_assets},
      {"n_scenarios", report.n_scenarios},
      {"k", report.k},
      {"beta", number(report.beta)},
      {"gamma", number(report.gamma)},
      {"eps", number(report.options.eps)},
      {"delta", number(report.options.delta)},
      {"time_limit", number(report.options.time_limit)},
  };
  j["config"] = {
      {"method", config.method},
      {"k", config.k},
      {"gamma", auto_or(config.gamma)},
      {"beta", config.beta},
      {"eps", config.eps},
      {"delta", config.delta},
      {"seed", config.seed},
      {"time_limit_sec", config.time_limit_sec},
      {"scale", config.scale},
      {"mu_bar", auto_or(config.mu_bar)},
      {"scenarios", config.scenarios_path},
      {"report", config.report_path},
  };
  return j.dump(2) + "\n";
}

ParsedReport parse_report(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, std::string("report is not valid JSON: ") + e.what());
  }
  ParsedReport out;
  try {
    auto& r = out.report;
    r.method = parse_method(j.at("method").get<std::string>());
    r.status = parse_status(j.at("status").get<std::string>());
    r.obj = read_number(j.at("obj"));
    r.lower_bound = read_number(j.at("lower_bound"));
    r.gap_pct = read_number(j.at("gap_pct"));
    r.time_sec = read_number(j.at("time_sec"));
    r.iterations = j.at("iterations").get<int>();
    r.nodes = j.at("nodes").get<long>();
    r.n_cuts = j.at("cuts").get<int>();
    r.selection = Selection(j.at("selection").get<std::vector<std::uint8_t>>());
    const auto& w = j.at("weights");
    r.portfolio.weights.resize(static_cast<Eigen::Index>(w.size()));
    for (std::size_t i = 0; i < w.size(); ++i) r.portfolio.weights[static_cast<Eigen::Index>(i)] = read_number(w[i]);
    r.portfolio.var_level = read_number(j.at("a"));
    r.portfolio.cvar_excess = read_number(j.at("v"));
    r.var = read_number(j.at("var"));
    r.cvar = read_number(j.at("cvar"));
    r.expected_return = read_number(j.at("expected_return"));
    const auto& inst = j.at("instance");
    r.n_assets = inst.at("n_assets").get<int>();
    r.n_scenarios = inst.at("n_scenarios").get<int>();
    r.k = inst.at("k").get<int>();
    r.beta = read_number(inst.at("beta"));
    r.gamma = read_number(inst.at("gamma"));
    r.options.eps = read_number(inst.at("eps"));
    r.options.delta = read_number(inst.at("delta"));
    r.options.time_limit = read_number(inst.at("time_limit"));

    const auto& c = j.at("config");
    auto& cfg = out.config;
    cfg.method = c.at("method").get<std::string>();
    cfg.k = c.at("k").get<int>();
    cfg.gamma = read_auto_or(c.at("gamma"));
    cfg.beta = c.at("beta").get<double>();
    cfg.eps = c.at("eps").get<double>();
    cfg.delta = c.at("delta").get<double>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    cfg.time_limit_sec = c.at("time_limit_sec").get<double>();
    cfg.scale = c.at("scale").get<double>();
    cfg.mu_bar = read_auto_or(c.at("mu_bar"));
    cfg.scenarios_path = c.at("scenarios").get<std::string>();
    cfg.report_path = c.at("report").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("malformed report: ") + e.what());
  }
  return out;
}

}  // namespace cvarcut
