#pragma once

#include "cvarcut/model.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace cvarcut {

/// Mean vector and covariance matrix of asset returns.
struct MomentData {
  Vector mu;
  Matrix sigma;

  int n_assets() const { return static_cast<int>(mu.size()); }
  /// Throws ParameterError unless sigma is square, matches mu, is symmetric
  /// within 1e-10 and has a nonnegative diagonal.
  void validate() const;
};

/// Scenario matrix together with its probabilities (uniform 1/S from files).
struct ScenarioSet {
  Matrix returns;  // S x N
  Vector probs;
};

/// OR-Library portfolio layout: N, then N lines "mean stddev", then
/// "i j corr" triples (1-based, upper triangle including the diagonal).
/// Means and standard deviations are multiplied by `scale`, so the covariance
/// scales by scale^2.
MomentData parse_orlibrary(std::string_view text, double scale = 1.0);

/// Inverse of parse_orlibrary (scale 1), printed with round-trip precision.
std::string write_orlibrary(const MomentData& moments);

struct CholeskyFactor {
  Matrix L;
  double jitter = 0.0;  ///< multiple of I added before the factorization succeeded
};

/// Lower-triangular L with L L^T = sigma + jitter I, escalating jitter through
/// {0, 1e-12, 1e-10, 1e-8}. Exactly singular positive semidefinite matrices
/// factor at jitter 0 (zero pivots give zero columns). Throws NotPsdError.
CholeskyFactor cholesky(const Matrix& sigma);

/// Row s = mu + L g_s. The standard normals g come from std::mt19937_64 seeded
/// with `seed`, turned into uniforms on (0,1) from the top 53 bits and paired
/// through the Box-Muller transform (cosine branch first). Drawing order is
/// scenario-major, asset-minor.
Matrix generate_scenarios(const MomentData& moments, int n_scenarios, std::uint64_t seed);

/// "S N" header line then S lines of N floats. Probabilities are 1/S.
ScenarioSet parse_scenarios(std::string_view text);

std::string write_scenarios(const Matrix& returns);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace cvarcut
