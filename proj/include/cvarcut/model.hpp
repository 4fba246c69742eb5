#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace cvarcut {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Full problem datum of the cardinality-constrained mean-CVaR model.
///
/// `scenarios` is S x N (row s holds the return vector of scenario s). The
/// rows of `side_A x <= side_b` are the linear portfolio constraints other than
/// the simplex; the expected-return floor is one of them once
/// `with_return_floor` has been applied.
struct Instance {
  Matrix scenarios;
  Vector probs;
  Matrix side_A;
  Vector side_b;
  double beta = 0.9;
  double gamma = 1.0;
  int k = 1;

  int n_assets() const { return static_cast<int>(scenarios.cols()); }
  int n_scenarios() const { return static_cast<int>(scenarios.rows()); }
  int n_side() const { return static_cast<int>(side_A.rows()); }

  /// Probability-weighted mean return of each asset.
  Vector expected_returns() const;

  /// Throws ParameterError when any invariant is violated.
  void validate() const;

  /// Instance with uniform probabilities 1/S, no side constraints.
  static Instance from_scenarios(Matrix scenarios, double beta, double gamma, int k);
};

/// Binary asset selection z.
class Selection {
 public:
  Selection() = default;
  explicit Selection(std::size_t n, bool value = false) : bits_(n, value ? 1 : 0) {}
  explicit Selection(std::vector<std::uint8_t> bits);

  static Selection all(std::size_t n) { return Selection(n, true); }
  static Selection from_support(std::size_t n, const std::vector<int>& support);

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool value) { bits_[i] = value ? 1 : 0; }

  int count() const;
  std::vector<int> support() const;
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  Vector as_vector() const;
  std::string to_string() const;

  /// Lexicographic order with 0 < 1 compared from the first asset on.
  auto operator<=>(const Selection&) const = default;
  bool operator==(const Selection&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

struct SelectionHash {
  std::size_t operator()(const Selection& z) const noexcept;
};

/// Decision (a, v, x) of the lower-level problem.
struct Portfolio {
  Vector weights;
  double var_level = 0.0;
  double cvar_excess = 0.0;
};

struct CvarValue {
  double var = 0.0;   ///< left beta-quantile of the loss
  double cvar = 0.0;
};

struct FeasibleSet {
  Matrix A;
  Vector b;
};

/// 0.3 * (mean of the k smallest entries) + 0.7 * (mean of the k largest).
double compute_mu_bar(const Vector& mu, int k);

/// Side constraints of `instance` with the row -mu^T x <= -mu_bar appended.
/// The simplex constraints are not rows of the result.
FeasibleSet build_feasible_set(const Instance& instance, double mu_bar);

/// Copy of `instance` whose side constraints include the expected-return floor.
Instance with_return_floor(const Instance& instance, double mu_bar);

/// Rockafellar-Uryasev function a + 1/(1-beta) sum_s p_s [-r_s^T x - a]_+.
double ru_function(double a, const Vector& x, const Instance& instance);

CvarValue cvar(const Vector& x, const Instance& instance);

/// (1/(2 gamma)) x^T x + a + v.
double objective(const Portfolio& portfolio, const Instance& instance);

/// Checks the Portfolio invariants (simplex within 1e-8, v >= -1e-10).
bool is_valid_portfolio(const Portfolio& portfolio);

}  // namespace cvarcut
