#include "cli.hpp"

#include "cvarcut/errors.hpp"
#include "cvarcut/ingest.hpp"
#include "cvarcut/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace cvarcut::cli {

namespace {

// "auto" or a finite number.
std::optional<double> parse_auto(const std::string& text, const char* flag) {
  if (text == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used == text.size() && std::isfinite(value)) return value;
  } catch (const std::exception&) {
  }
  throw CLI::ValidationError(flag, "expected a number or 'auto', got '" + text + "'");
}

// Reads and parses one input file, naming the file in any error.
template <class Parse>
auto load(const std::string& path, Parse&& parse) {
  try {
    return parse(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(0, path + ": " + e.what());
  }
}

int exit_code(Status status) {
  switch (status) {
    case Status::Optimal: return kExitOptimal;
    case Status::TimeLimit: return kExitTimeLimit;
    case Status::Infeasible: return kExitInfeasible;
  }
  return kExitFailure;
}

struct GenArgs {
  std::string orlib;
  int scenarios = 0;
  std::uint64_t seed = 0;
  double scale = 1.0;
  std::string out;
};

int cmd_gen(const GenArgs& args) {
  const auto moments = load(args.orlib, [&](const std::string& t) { return parse_orlibrary(t, args.scale); });
  write_text_file(args.out, write_scenarios(generate_scenarios(moments, args.scenarios, args.seed)));
  spdlog::info("wrote {} scenarios of {} assets to {}", args.scenarios, moments.n_assets(), args.out);
  return kExitOptimal;
}

struct SolveArgs {
  RunConfig config;
  std::string gamma = "auto";
  std::string mu_bar = "auto";
};

int cmd_solve(SolveArgs args, std::ostream& out) {
  auto& cfg = args.config;
  cfg.gamma = parse_auto(args.gamma, "--gamma");
  cfg.mu_bar = parse_auto(args.mu_bar, "--mu-bar");
  parse_method(cfg.method);
  const auto scenarios = load(cfg.scenarios_path, [](const std::string& t) { return parse_scenarios(t); });
  const auto instance = build_instance(cfg, scenarios);
  const auto report = run_method(cfg, instance);
  write_text_file(cfg.report_path, write_report(cfg, report));
  out << fmt::format("{} {:.10g} {:.6f}% {:.3f}s {} {}\n", to_string(report.method), report.obj, report.gap_pct,
                     report.time_sec, report.n_cuts, report.nodes);
  return exit_code(report.status);
}

// Bench configuration (JSON):
//   instances: [{name, orlib | scenarios, scale?}], methods: [...], S: [...],
//   k: [...], gamma: ["auto" | number, ...], seed, beta?, eps?, delta?,
//   time_limit?, mu_bar?
// Paths are relative to the configuration file.
struct BenchArgs {
  std::string config;
  std::string out;
};

std::string csv_number(double value) { return std::isfinite(value) ? fmt::format("{:.17g}", value) : ""; }

int cmd_bench(const BenchArgs& args, std::ostream& out) {
  using Json = nlohmann::json;
  Json cfg;
  try {
    cfg = Json::parse(read_text_file(args.config));
  } catch (const Json::parse_error& e) {
    throw ParseError(0, args.config + ": " + e.what());
  }
  const auto base = std::filesystem::path(args.config).parent_path();
  auto resolve = [&](const std::string& p) { return (base / p).string(); };

  std::ofstream csv(args.out, std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot write '" + args.out + "'");
  const std::string header = "instance,method,S,k,gamma,obj,gap_pct,time_sec,nodes,cuts,status";
  csv << header << '\n' << std::flush;
  out << header << '\n';

  RunConfig common;
  common.seed = cfg.value("seed", std::uint64_t{0});
  common.beta = cfg.value("beta", kDefaultBeta);
  common.eps = cfg.value("eps", kDefaultTolerance);
  common.delta = cfg.value("delta", kDefaultTolerance);
  common.time_limit_sec = cfg.value("time_limit", kDefaultTimeLimit);
  if (cfg.contains("mu_bar") && !cfg["mu_bar"].is_string()) common.mu_bar = cfg["mu_bar"].get<double>();
  const auto methods = cfg.at("methods").get<std::vector<std::string>>();
  const auto ks = cfg.at("k").get<std::vector<int>>();
  std::vector<std::optional<double>> gammas;
  for (const auto& g : cfg.value("gamma", Json::array({"auto"})))
    gammas.push_back(g.is_string() ? std::nullopt : std::optional<double>(g.get<double>()));
  const auto sizes = cfg.value("S", std::vector<int>{});

  for (const auto& entry : cfg.at("instances")) {
    const auto name = entry.at("name").get<std::string>();
    // One scenario set per S (or the fixed file), shared by every method and parameter.
    std::vector<std::pair<int, std::optional<ScenarioSet>>> sets;
    std::string load_error;
    try {
      if (entry.contains("scenarios")) {
        auto set = load(resolve(entry["scenarios"].get<std::string>()),
                        [](const std::string& t) { return parse_scenarios(t); });
        const int s = static_cast<int>(set.returns.rows());
        sets.emplace_back(s, std::move(set));
      } else {
        const double scale = entry.value("scale", 1.0);
        const auto moments = load(resolve(entry.at("orlib").get<std::string>()),
                                  [&](const std::string& t) { return parse_orlibrary(t, scale); });
        for (int s : sizes) {
          ScenarioSet set;
          set.returns = generate_scenarios(moments, s, common.seed);
          set.probs = Vector::Constant(s, 1.0 / s);
          sets.emplace_back(s, std::move(set));
        }
      }
    } catch (const std::exception& e) {
      load_error = e.what();
      spdlog::error("bench: instance {}: {}", name, load_error);
      sets.clear();
      for (int s : sizes) sets.emplace_back(s, std::nullopt);
      if (sets.empty()) sets.emplace_back(0, std::nullopt);
    }

    for (const auto& [s, set] : sets)
      for (int k : ks)
        for (const auto& gamma : gammas)
          for (const auto& method : methods) {
            RunConfig rc = common;
            rc.method = method;
            rc.k = k;
            rc.gamma = gamma;
            std::string row;
            try {
              if (!set) throw std::runtime_error(load_error);
              const auto instance = build_instance(rc, *set);
              const auto report = run_method(rc, instance);
              row = fmt::format("{},{},{},{},{},{},{},{:.3f},{},{},{}", name, method, s, k, csv_number(instance.gamma),
                                csv_number(report.obj), csv_number(report.gap_pct), report.time_sec, report.nodes,
                                report.n_cuts, to_string(report.status));
            } catch (const std::exception& e) {
              spdlog::error("bench: {} {} S={} k={}: {}", name, method, s, k, e.what());
              const double g = gamma.value_or(set ? auto_gamma(static_cast<int>(set->returns.cols())) : 0.0);
              row = fmt::format("{},{},{},{},{},,,,,,Error", name, method, s, k, csv_number(g));
            }
            csv << row << '\n' << std::flush;
            out << row << '\n' << std::flush;
          }
  }
  return kExitOptimal;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out) {
  CLI::App app{"Cardinality-constrained mean-CVaR portfolio optimization"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging on stderr");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Sample return scenarios from OR-Library moments");
  gen_cmd->add_option("--orlib", gen.orlib, "OR-Library moment file")->required();
  gen_cmd->add_option("--scenarios", gen.scenarios, "Number of scenarios S")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->required();
  gen_cmd->add_option("--scale", gen.scale, "Multiplier applied to means and deviations");
  gen_cmd->add_option("--out", gen.out, "Scenario file to write")->required();

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one instance and write a JSON report");
  auto& sc = solve.config;
  solve_cmd->add_option("--scenarios", sc.scenarios_path, "Scenario file")->required();
  solve_cmd->add_option("--k", sc.k, "Cardinality bound")->required()->check(CLI::PositiveNumber);
  solve_cmd->add_option("--method", sc.method, "Solution method")
      ->required()
      ->check(CLI::IsMember({"bcp", "bcpc", "cp", "bigm", "oracle"}));
  solve_cmd->add_option("--gamma", solve.gamma, "Ridge parameter or 'auto' (10/sqrt(N))");
  solve_cmd->add_option("--beta", sc.beta, "CVaR probability level")->check(CLI::Range(0.0, 1.0));
  solve_cmd->add_option("--eps", sc.eps, "Upper-level tolerance")->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--delta", sc.delta, "Lower-level tolerance")->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--time-limit", sc.time_limit_sec, "Seconds")->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--mu-bar", solve.mu_bar, "Required expected return or 'auto'");
  solve_cmd->add_option("--seed", sc.seed, "Seed echoed into the report");
  solve_cmd->add_option("--scale", sc.scale, "Scale echoed into the report");
  solve_cmd->add_option("--report", sc.report_path, "Report file to write")->required();

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run a method/parameter grid and write CSV rows");
  bench_cmd->add_option("--config", bench.config, "JSON grid description")->required();
  bench_cmd->add_option("--out", bench.out, "CSV file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOptimal;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << "Run with --help for usage.\n";
    return kExitUsage;
  }
  // stdout is reserved for the summary line and CSV rows.
  spdlog::set_default_logger(
      std::make_shared<spdlog::logger>("cvarcut", std::make_shared<spdlog::sinks::stderr_color_sink_mt>()));
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*gen_cmd) return cmd_gen(gen);
    if (*solve_cmd) return cmd_solve(solve, out);
    return cmd_bench(bench, out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const ParameterError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const ParseError& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
}

}  // namespace cvarcut::cli
