#pragma once

#include "local/matrix.hpp"

namespace local {

/// Combined LU storage: unit-lower L strictly below the diagonal, U on and
/// above it. `perm` maps factored row -> original row; `sign` is the
/// permutation parity.
struct LUFactors {
  Matrix combined;
  std::vector<int> perm;
  int sign = 1;
};

inline constexpr double kPivotTolerance = 1e-12;

// OpenMP-parallel product; dispatches to the serial kernel for small sizes.
Matrix matmul(const Matrix& a, const Matrix& b);
// Serial reference kernel, kept for testing and benchmarking.
Matrix matmul_serial(const Matrix& a, const Matrix& b);

LUFactors lu_decompose(const Matrix& a);
double log_abs_det(const Matrix& a);
double log_abs_det(const LUFactors& f);
Matrix lu_solve(const LUFactors& f, const Matrix& b);

/// Solve A x = b for square nonsingular A.
Matrix solve(const Matrix& a, const Matrix& b);
Matrix inverse(const Matrix& a);

/// Scaling-and-squaring matrix exponential with a truncated Taylor core.
Matrix matrix_exponential(const Matrix& a);

}  // namespace local
