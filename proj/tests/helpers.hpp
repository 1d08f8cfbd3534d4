#pragma once

#include <cmath>
#include <random>

#include "local/matrix.hpp"

namespace testutil {

using local::Matrix;

inline Matrix random_matrix(std::mt19937_64& rng, int r, int c, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> unif(lo, hi);
  Matrix m(r, c);
  for (double& x : m.data) x = unif(rng);
  return m;
}

/// Random square matrix shifted toward diagonal dominance (well conditioned).
inline Matrix random_well_conditioned(std::mt19937_64& rng, int n) {
  Matrix m = random_matrix(rng, n, n);
  for (int i = 0; i < n; ++i) m(i, i) += n;
  return m;
}

inline double rel_error(const Matrix& a, const Matrix& b) {
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    double d = a.data[i] - b.data[i];
    num += d * d;
    den += b.data[i] * b.data[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

/// Cofactor-expansion determinant, brute-force oracle for small n.
inline double det_cofactor(const Matrix& m) {
  const int n = m.rows;
  if (n == 1) return m(0, 0);
  double det = 0.0;
  for (int j = 0; j < n; ++j) {
    if (m(0, j) == 0.0) continue;
    Matrix minor(n - 1, n - 1);
    for (int r = 1; r < n; ++r) {
      int cc = 0;
      for (int c = 0; c < n; ++c) {
        if (c == j) continue;
        minor(r - 1, cc++) = m(r, c);
      }
    }
    det += (j % 2 == 0 ? 1.0 : -1.0) * m(0, j) * det_cofactor(minor);
  }
  return det;
}

}  // namespace testutil
