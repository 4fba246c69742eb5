#include "cvarcut/master.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

namespace cvarcut {
namespace {

MasterState make_state(int n, int k, double lb) {
  MasterState s;
  s.n_assets = n;
  s.k = k;
  s.theta_lb = lb;
  return s;
}

// Exhaustive minimum of theta over admissible z; ties to the lexicographically smallest z.
std::optional<std::pair<Selection, double>> enumerate(const MasterState& s) {
  std::optional<std::pair<Selection, double>> best;
  for (unsigned mask = 0; mask < (1u << s.n_assets); ++mask) {
    Selection z(static_cast<std::size_t>(s.n_assets));
    for (int i = 0; i < s.n_assets; ++i) z.set(static_cast<std::size_t>(i), (mask >> i) & 1u);
    if (z.count() > s.k) continue;
    bool ok = true;
    for (const auto& c : s.cuts) ok = ok && c.admits(z);
    if (!ok) continue;
    const double v = s.theta_at(z);
    if (!best || v < best->second - 1e-9 * (1 + std::abs(v)) ||
        (std::abs(v - best->second) <= 1e-9 * (1 + std::abs(v)) && z < best->first))
      best = {{z, v}};
  }
  return best;
}

TEST(CutTest, Semantics) {
  const auto c = Cut::optimality(5.0, Vector{{-2, -3}}, Selection::from_support(2, {0}));
  EXPECT_DOUBLE_EQ(c.value_at(Selection::from_support(2, {1})), 4.0);
  EXPECT_DOUBLE_EQ(c.value_at(Selection::from_support(2, {0})), 5.0);
  EXPECT_THROW(Cut::optimality(0.0, Vector{{1.0}}, Selection(1)), ParameterError);
  const auto ng = Cut::no_good(Selection::from_support(2, {1}));
  EXPECT_FALSE(ng.admits(Selection::from_support(2, {1})));
  EXPECT_TRUE(ng.admits(Selection::from_support(2, {0})));
}

TEST(MasterSolve, LowerBoundOnly) {
  auto s = make_state(3, 1, -5.0);
  const auto r = master_solve(s);
  ASSERT_EQ(r.status, MasterStatus::Optimal);
  EXPECT_DOUBLE_EQ(r.theta, -5.0);
  EXPECT_EQ(r.z, Selection(3));
}

TEST(MasterSolve, SingleCutAndNoGood) {
  auto s = make_state(2, 1, -10.0);
  add_cut(s, Cut::optimality(5.0, Vector{{-2, -3}}, Selection::from_support(2, {0})));
  auto r = master_solve(s);
  ASSERT_EQ(r.status, MasterStatus::Optimal);
  EXPECT_NEAR(r.theta, 4.0, 1e-12);
  EXPECT_EQ(r.z, Selection::from_support(2, {1}));

  add_cut(s, Cut::no_good(Selection::from_support(2, {1})));
  r = master_solve(s);
  EXPECT_NEAR(r.theta, 5.0, 1e-12);
  EXPECT_EQ(r.z, Selection::from_support(2, {0}));
}

TEST(MasterSolve, DuplicateCutChangesNothing) {
  auto s = make_state(4, 2, -10.0);
  const auto c = Cut::optimality(3.0, Vector{{-1, -0.5, -2, 0}}, Selection::from_support(4, {0, 1}));
  add_cut(s, c);
  const auto a = master_solve(s);
  add_cut(s, c);
  const auto b = master_solve(s);
  EXPECT_EQ(a.z, b.z);
  EXPECT_DOUBLE_EQ(a.theta, b.theta);
}

TEST(MasterSolve, InfeasibleWhenEverythingExcluded) {
  auto s = make_state(2, 1, 0.0);
  for (auto sup : std::vector<std::vector<int>>{{}, {0}, {1}}) add_cut(s, Cut::no_good(Selection::from_support(2, sup)));
  EXPECT_EQ(master_solve(s).status, MasterStatus::Infeasible);
}

TEST(MasterSolve, NodeLimitCarriesIncumbent) {
  // theta >= -2 z_1 and theta >= -2 z_2 with k = 1: the root LP splits z evenly.
  auto s = make_state(2, 1, -10.0);
  add_cut(s, Cut::optimality(0.0, Vector{{-2, 0}}, Selection(2)));
  add_cut(s, Cut::optimality(0.0, Vector{{0, -2}}, Selection(2)));
  EXPECT_NEAR(*master_relaxation_bound(s), -1.0, 1e-12);
  MasterOptions opt;
  opt.node_limit = 1;
  EXPECT_THROW(master_solve(s, opt), NodeLimitError);
  const auto r = master_solve(s);
  EXPECT_NEAR(r.theta, 0.0, 1e-12);
  EXPECT_EQ(r.z, Selection(2));
}

TEST(MasterSolve, RandomPoolsMatchEnumeration) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + trial % 11;
    const int k = 1 + static_cast<int>(rng() % static_cast<unsigned>(n));
    auto s = make_state(n, k, -5.0 - 5.0 * ud(rng));
    double previous = -std::numeric_limits<double>::infinity();
    const int n_cuts = 1 + trial % 12;
    for (int c = 0; c < n_cuts; ++c) {
      Selection z0(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) z0.set(static_cast<std::size_t>(i), ud(rng) < 0.4);
      if (ud(rng) < 0.2) {
        add_cut(s, Cut::no_good(z0));
      } else {
        Vector g(n);
        for (int i = 0; i < n; ++i) g[i] = -std::pow(3.0 * ud(rng), 2);
        if (trial % 3 == 0) g = g.array().round();  // integral data produce exact ties
        add_cut(s, Cut::optimality(std::round(10 * ud(rng)), g, z0));
      }
      const auto expected = enumerate(s);
      const auto got = master_solve(s);
      if (!expected) {
        EXPECT_EQ(got.status, MasterStatus::Infeasible);
        break;
      }
      ASSERT_EQ(got.status, MasterStatus::Optimal);
      EXPECT_NEAR(got.theta, expected->second, 1e-9 * (1 + std::abs(got.theta)));
      EXPECT_EQ(got.z, expected->first) << "trial " << trial;
      EXPECT_GE(got.theta, s.theta_lb);
      EXPECT_DOUBLE_EQ(got.theta, s.theta_at(got.z));
      EXPECT_GE(got.theta, previous - 1e-12);
      previous = got.theta;
      const auto root = master_relaxation_bound(s);
      ASSERT_TRUE(root);
      EXPECT_LE(*root, got.theta + 1e-9);
    }
  }
}

TEST(MasterSingleTree, AgreesWithMultiTreeOnFixedPool) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 6, k = 2;
    auto s = make_state(n, k, -20.0);
    for (int c = 0; c < 5; ++c) {
      Vector g(n);
      for (int i = 0; i < n; ++i) g[i] = -4.0 * ud(rng);
      add_cut(s, Cut::optimality(10 * ud(rng), g, Selection(static_cast<std::size_t>(n))));
    }
    auto copy = s;
    const auto multi = master_solve(copy);
    SingleTreeOptions opt;
    opt.eps = 0.0;
    const auto single = master_solve_single_tree(s, [](const Selection&, MasterState&) { return false; }, opt);
    ASSERT_EQ(single.status, MasterStatus::Optimal);
    EXPECT_NEAR(single.bound, multi.theta, 1e-9);
    EXPECT_NEAR(single.theta, multi.theta, 1e-9);
  }
}

TEST(MasterSingleTree, LazyCutsReshapeTheTree) {
  // Hidden function f(z) = 10 - sum w_i z_i (linear, so its own tangent cuts are exact).
  const Vector w{{1.0, 3.0, 2.0, 0.5}};
  auto s = make_state(4, 2, -100.0);
  int calls = 0;
  double ub = std::numeric_limits<double>::infinity();
  std::set<Selection> seen;
  auto cb = [&](const Selection& z, MasterState& st) {
    ++calls;
    if (!seen.insert(z).second) return false;
    const double f = 10.0 - w.dot(z.as_vector());
    ub = std::min(ub, f);
    add_cut(st, Cut::optimality(f, -w, z));
    return true;
  };
  SingleTreeOptions opt;
  opt.eps = 1e-9;
  opt.upper_bound = [&] { return ub; };
  const auto r = master_solve_single_tree(s, cb, opt);
  ASSERT_EQ(r.status, MasterStatus::Optimal);
  EXPECT_NEAR(ub, 5.0, 1e-12);  // z = {1, 2}
  EXPECT_NEAR(r.bound, 5.0, 1e-9);
  EXPECT_GE(calls, 1);
}

}  // namespace
}  // namespace cvarcut
