#include "cvarcut/model.hpp"

#include "cvarcut/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace cvarcut {

Vector Instance::expected_returns() const { return scenarios.transpose() * probs; }

void Instance::validate() const {
  const int n = n_assets();
  const int s = n_scenarios();
  if (n < 1) throw ParameterError("instance has no assets");
  if (s < 1) throw ParameterError("instance has no scenarios");
  if (probs.size() != s) throw ParameterError("probability vector length differs from scenario count");
  if (!scenarios.allFinite()) throw ParameterError("scenario matrix has non-finite entries");
  if (!probs.allFinite() || (probs.array() < 0.0).any())
    throw ParameterError("probabilities must be finite and nonnegative");
  if (std::abs(probs.sum() - 1.0) > 1e-12) throw ParameterError("probabilities must sum to 1");
  if (!(beta > 0.0 && beta < 1.0)) throw ParameterError("beta must lie in (0,1)");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("gamma must be positive");
  if (k < 1 || k > n) throw ParameterError("cardinality k must lie in [1, N]");
  if (side_A.rows() != side_b.size()) throw ParameterError("side_A rows differ from side_b length");
  if (side_A.rows() > 0 && side_A.cols() != n) throw ParameterError("side_A column count differs from N");
  if (!side_A.allFinite() || !side_b.allFinite()) throw ParameterError("side constraints have non-finite entries");
}

Instance Instance::from_scenarios(Matrix scenarios, double beta, double gamma, int k) {
  Instance inst;
  const auto s = scenarios.rows();
  const auto n = scenarios.cols();
  inst.scenarios = std::move(scenarios);
  inst.probs = Vector::Constant(s, 1.0 / static_cast<double>(s));
  inst.side_A = Matrix(0, n);
  inst.side_b = Vector(0);
  inst.beta = beta;
  inst.gamma = gamma;
  inst.k = k;
  return inst;
}

Selection::Selection(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto& b : bits_) b = b ? 1 : 0;
}

Selection Selection::from_support(std::size_t n, const std::vector<int>& support) {
  Selection z(n);
  for (int i : support) z.set(static_cast<std::size_t>(i), true);
  return z;
}

int Selection::count() const { return static_cast<int>(std::count(bits_.begin(), bits_.end(), 1)); }

std::vector<int> Selection::support() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) out.push_back(static_cast<int>(i));
  return out;
}

Vector Selection::as_vector() const {
  Vector v(static_cast<Eigen::Index>(bits_.size()));
  for (std::size_t i = 0; i < bits_.size(); ++i) v[static_cast<Eigen::Index>(i)] = bits_[i];
  return v;
}

std::string Selection::to_string() const {
  std::string s;
  s.reserve(bits_.size());
  for (auto b : bits_) s.push_back(b ? '1' : '0');
  return s;
}

std::size_t SelectionHash::operator()(const Selection& z) const noexcept {
  // FNV-1a over the bit bytes.
  std::size_t h = 1469598103934665603ull;
  for (auto b : z.bits()) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

double compute_mu_bar(const Vector& mu, int k) {
  const auto n = static_cast<int>(mu.size());
  if (k < 1 || k > n) throw ParameterError("compute_mu_bar: k must lie in [1, N]");
  std::vector<double> sorted(mu.data(), mu.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const double bottom = std::accumulate(sorted.begin(), sorted.begin() + k, 0.0) / k;
  const double top = std::accumulate(sorted.end() - k, sorted.end(), 0.0) / k;
  return 0.3 * bottom + 0.7 * top;
}

FeasibleSet build_feasible_set(const Instance& instance, double mu_bar) {
  const int n = instance.n_assets();
  const int m = instance.n_side();
  FeasibleSet out;
  out.A.resize(m + 1, n);
  out.b.resize(m + 1);
  if (m > 0) {
    out.A.topRows(m) = instance.side_A;
    out.b.head(m) = instance.side_b;
  }
  out.A.row(m) = -instance.expected_returns().transpose();
  out.b[m] = -mu_bar;
  return out;
}

Instance with_return_floor(const Instance& instance, double mu_bar) {
  Instance out = instance;
  auto fs = build_feasible_set(instance, mu_bar);
  out.side_A = std::move(fs.A);
  out.side_b = std::move(fs.b);
  return out;
}

double ru_function(double a, const Vector& x, const Instance& instance) {
  const Vector losses = -(instance.scenarios * x);
  double tail = 0.0;
  for (Eigen::Index s = 0; s < losses.size(); ++s) tail += instance.probs[s] * std::max(losses[s] - a, 0.0);
  return a + tail / (1.0 - instance.beta);
}

CvarValue cvar(const Vector& x, const Instance& instance) {
  const Vector losses = -(instance.scenarios * x);
  const auto s = losses.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(s));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return losses[i] < losses[j]; });

  // Cumulative sums of equal probabilities drift below beta (nine 0.1's sum to
  // 0.8999999999999999), so the quantile test carries a 1e-12 allowance.
  double cdf = 0.0;
  double a_star = losses[order.back()];
  for (auto idx : order) {
    cdf += instance.probs[idx];
    if (cdf >= instance.beta - 1e-12) {
      a_star = losses[idx];
      break;
    }
  }
  return {a_star, ru_function(a_star, x, instance)};
}

double objective(const Portfolio& portfolio, const Instance& instance) {
  return portfolio.weights.squaredNorm() / (2.0 * instance.gamma) + portfolio.var_level + portfolio.cvar_excess;
}

bool is_valid_portfolio(const Portfolio& portfolio) {
  if (!portfolio.weights.allFinite()) return false;
  if (std::abs(portfolio.weights.sum() - 1.0) > 1e-8) return false;
  if ((portfolio.weights.array() < -1e-10).any()) return false;
  return portfolio.cvar_excess >= -1e-10;
}

}  // namespace cvarcut
