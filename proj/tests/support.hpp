#pragma once

// Shared helpers for the unit tests.

#include <cmath>
#include <span>

#include "olrwa/linalg.hpp"
#include "olrwa/rng.hpp"

namespace olrwa::test {

inline double max_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return a.size() == b.size() ? m : INFINITY;
}

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo = -10, double hi = 10) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rng.uniform(lo, hi);
  return m;
}

inline Vector random_vector(Rng& rng, std::size_t n, double lo = -10, double hi = 10) {
  Vector v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace olrwa::test
