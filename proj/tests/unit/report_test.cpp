#include "cvarcut/errors.hpp"
#include "cvarcut/report.hpp"
#include "instances.hpp"

#include <gtest/gtest.h>

namespace cvarcut {
namespace {

RunConfig sample_config() {
  RunConfig c;
  c.method = "bcpc";
  c.k = 3;
  c.gamma = 2.5;
  c.seed = 12345678901234ULL;
  c.mu_bar = std::nullopt;
  c.scenarios_path = "in.txt";
  c.report_path = "out.json";
  return c;
}

TEST(RunConfigTest, Defaults) {
  const RunConfig c;
  EXPECT_EQ(c.beta, 0.9);
  EXPECT_EQ(c.eps, 1e-5);
  EXPECT_EQ(c.delta, 1e-5);
  EXPECT_EQ(c.time_limit_sec, 3600.0);
  EXPECT_FALSE(c.gamma);
  EXPECT_FALSE(c.mu_bar);
  EXPECT_DOUBLE_EQ(auto_gamma(25), 2.0);
  EXPECT_DOUBLE_EQ(auto_gamma(100), 1.0);
  EXPECT_THROW(auto_gamma(0), ParameterError);
}

TEST(RunConfigTest, BuildInstanceResolvesAutoValues) {
  ScenarioSet set;
  set.returns = Matrix{{1.0, 2.0, 3.0, 4.0}, {3.0, 2.0, 1.0, 0.0}};
  set.probs = Vector::Constant(2, 0.5);
  RunConfig c;
  c.k = 1;
  const auto inst = build_instance(c, set);
  EXPECT_DOUBLE_EQ(inst.gamma, 5.0);
  EXPECT_EQ(inst.beta, 0.9);
  EXPECT_EQ(inst.k, 1);
  ASSERT_EQ(inst.n_side(), 1);
  // Means (2, 2, 2, 2): the floor is 2 whatever k is.
  EXPECT_DOUBLE_EQ(-inst.side_b[0], 2.0);

  c.gamma = 0.5;
  c.mu_bar = 1.25;
  const auto explicit_inst = build_instance(c, set);
  EXPECT_DOUBLE_EQ(explicit_inst.gamma, 0.5);
  EXPECT_DOUBLE_EQ(-explicit_inst.side_b[0], 1.25);
}

TEST(ReportTest, RoundTripOfASolvedInstance) {
  const auto inst = testing::random_instance(6, 2, 30, 4);
  auto config = sample_config();
  const auto report = run_method(config, inst);
  const auto text = write_report(config, report);
  const auto parsed = parse_report(text);
  EXPECT_EQ(parsed.config, config);
  EXPECT_EQ(parsed.report.method, report.method);
  EXPECT_EQ(parsed.report.status, report.status);
  EXPECT_EQ(parsed.report.obj, report.obj);
  EXPECT_EQ(parsed.report.lower_bound, report.lower_bound);
  EXPECT_EQ(parsed.report.selection, report.selection);
  EXPECT_EQ(parsed.report.portfolio.weights, report.portfolio.weights);
  EXPECT_EQ(parsed.report.gamma, inst.gamma);
  EXPECT_EQ(write_report(parsed.config, parsed.report), text);
}

TEST(ReportTest, NonFiniteValuesBecomeNull) {
  SolveReport r;
  r.status = Status::Infeasible;
  r.obj = std::numeric_limits<double>::infinity();
  r.gap_pct = r.obj;
  r.selection = Selection(2);
  r.portfolio.weights = Vector::Zero(2);
  const auto text = write_report(RunConfig{}, r);
  EXPECT_NE(text.find("\"obj\": null"), std::string::npos);
  const auto back = parse_report(text);
  EXPECT_TRUE(std::isinf(back.report.obj));
  EXPECT_EQ(back.report.status, Status::Infeasible);
  EXPECT_FALSE(back.config.gamma);
}

TEST(ReportTest, KeysAreStable) {
  SolveReport r;
  r.selection = Selection(1);
  r.portfolio.weights = Vector::Ones(1);
  const auto text = write_report(RunConfig{}, r);
  std::size_t last = 0;
  for (const char* key : {"\"method\"", "\"status\"", "\"obj\"", "\"lower_bound\"", "\"gap_pct\"", "\"time_sec\"",
                          "\"iterations\"", "\"nodes\"", "\"cuts\"", "\"selection\"", "\"weights\"", "\"var\"",
                          "\"cvar\"", "\"expected_return\"", "\"instance\"", "\"config\""}) {
    const auto pos = text.find(key);
    ASSERT_NE(pos, std::string::npos) << key;
    EXPECT_GT(pos, last) << key;
    last = pos;
  }
}

TEST(ReportTest, MalformedInput) {
  EXPECT_THROW(parse_report("{"), ParseError);
  EXPECT_THROW(parse_report("{\"method\": \"bcp\"}"), ParseError);
  EXPECT_THROW(parse_report("[]"), ParseError);
}

}  // namespace
}  // namespace cvarcut
