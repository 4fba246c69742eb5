#pragma once

// Seeded synthetic instances shared by the unit and acceptance tests.

#include "cvarcut/ingest.hpp"
#include "cvarcut/model.hpp"

#include <cstdint>
#include <random>

namespace cvarcut::testing {

/// Three-factor covariance with monthly-percent scale: means in [0.5, 1.5],
/// standard deviations roughly 4 to 8.
MomentData factor_moments(int n_assets, std::uint64_t seed);

/// Sampled instance with p = 1/S, gamma = 10/sqrt(N) unless given, and the
/// expected-return floor set by the mu-bar rule for k.
Instance random_instance(int n_assets, int k, int n_scenarios, std::uint64_t seed, double beta = 0.9,
                         double gamma = 0.0);

/// Uniformly random support of size exactly `size`.
Selection random_selection(int n_assets, int size, std::mt19937_64& rng);

/// 2-asset, 1-scenario instance with returns (0.1, 0.2), no return floor.
Instance two_asset_instance(double beta, int k);

}  // namespace cvarcut::testing
