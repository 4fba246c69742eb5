#pragma once

// Helpers shared by the lower-level solvers (not installed).

#include "cvarcut/model.hpp"
#include "cvarcut/numeric/convex_program.hpp"

#include <vector>

namespace cvarcut::detail {

// Lower-level solves run tighter than the library default so that bounds from
// different formulations can be compared at the 1e-9 level.
inline constexpr numeric::IpmOptions kLowerIpm{1e-10, 300, 1e-8};

inline Matrix select_columns(const Matrix& m, const std::vector<int>& cols) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(cols[j]);
  return out;
}

// Scatters the restricted weights into length N, clipping solver round-off
// below zero and restoring the unit budget.
inline Vector full_weights(const Vector& x_sel, const std::vector<int>& support, Eigen::Index n) {
  Vector x = Vector::Zero(n);
  for (std::size_t j = 0; j < support.size(); ++j)
    x[support[j]] = std::max(x_sel[static_cast<Eigen::Index>(j)], 0.0);
  const double total = x.sum();
  if (total > 0.0) x /= total;
  return x;
}

}  // namespace cvarcut::detail
