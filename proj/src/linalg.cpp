#include "local/linalg.hpp"

#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace local {

namespace {

void check_product_shapes(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows)
    throw DimensionError("matmul: inner dimensions differ (" + std::to_string(a.cols) + " vs " +
                         std::to_string(b.rows) + ")");
}

inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& c, int i) {
  const double* arow = a.data.data() + static_cast<size_t>(i) * a.cols;
  double* crow = c.data.data() + static_cast<size_t>(i) * b.cols;
  for (int k = 0; k < a.cols; ++k) {
    double aik = arow[k];
    if (aik == 0.0) continue;
    const double* brow = b.data.data() + static_cast<size_t>(k) * b.cols;
    for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
  }
}

}  // namespace

Matrix matmul_serial(const Matrix& a, const Matrix& b) {
  check_product_shapes(a, b);
  Matrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) matmul_row(a, b, c, i);
  return c;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_product_shapes(a, b);
  // Row-parallel with a fixed inner accumulation order, so the result is
  // bitwise identical to the serial kernel.
  const size_t work = a.size() * static_cast<size_t>(b.cols);
  if (work < 1u << 16) return matmul_serial(a, b);
  Matrix c(a.rows, b.cols);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.rows; ++i) matmul_row(a, b, c, i);
  return c;
}

LUFactors lu_decompose(const Matrix& a) {
  if (a.rows != a.cols) throw DimensionError("lu_decompose: matrix must be square");
  const int n = a.rows;
  LUFactors f;
  f.combined = a;
  f.perm.resize(n);
  std::iota(f.perm.begin(), f.perm.end(), 0);
  f.sign = 1;
  Matrix& m = f.combined;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    double best = std::fabs(m(col, col));
    for (int r = col + 1; r < n; ++r) {
      double v = std::fabs(m(r, col));
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best < kPivotTolerance)
      throw SingularError("lu_decompose: pivot " + std::to_string(col) + " below tolerance");
    if (pivot != col) {
      for (int j = 0; j < n; ++j) std::swap(m(pivot, j), m(col, j));
      std::swap(f.perm[pivot], f.perm[col]);
      f.sign = -f.sign;
    }
    const double inv_piv = 1.0 / m(col, col);
    for (int r = col + 1; r < n; ++r) {
      double factor = m(r, col) * inv_piv;
      m(r, col) = factor;
      if (factor == 0.0) continue;
      for (int j = col + 1; j < n; ++j) m(r, j) -= factor * m(col, j);
    }
  }
  return f;
}

double log_abs_det(const LUFactors& f) {
  double s = 0.0;
  for (int i = 0; i < f.combined.rows; ++i) s += std::log(std::fabs(f.combined(i, i)));
  return s;
}

double log_abs_det(const Matrix& a) { return log_abs_det(lu_decompose(a)); }

Matrix lu_solve(const LUFactors& f, const Matrix& b) {
  const int n = f.combined.rows;
  if (b.rows != n) throw DimensionError("lu_solve: right-hand side has wrong row count");
  const Matrix& m = f.combined;
  Matrix x(n, b.cols);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < b.cols; ++j) x(i, j) = b(f.perm[i], j);
  // forward substitution with unit-lower L
  for (int i = 1; i < n; ++i)
    for (int k = 0; k < i; ++k) {
      double l = m(i, k);
      if (l == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) x(i, j) -= l * x(k, j);
    }
  // back substitution with U
  for (int i = n - 1; i >= 0; --i) {
    for (int k = i + 1; k < n; ++k) {
      double u = m(i, k);
      if (u == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) x(i, j) -= u * x(k, j);
    }
    double inv = 1.0 / m(i, i);
    for (int j = 0; j < b.cols; ++j) x(i, j) *= inv;
  }
  return x;
}

Matrix solve(const Matrix& a, const Matrix& b) { return lu_solve(lu_decompose(a), b); }

Matrix inverse(const Matrix& a) { return solve(a, Matrix::identity(a.rows)); }

Matrix matrix_exponential(const Matrix& a) {
  if (a.rows != a.cols) throw DimensionError("matrix_exponential: matrix must be square");
  if (!all_finite(a)) throw NumericError("matrix_exponential: non-finite entries");
  const int n = a.rows;
  double norm = one_norm(a);
  int squarings = 0;
  Matrix scaled = a;
  if (norm > 1.0) {
    squarings = static_cast<int>(std::ceil(std::log2(norm)));
    scaled = scale(a, std::ldexp(1.0, -squarings));
  }
  Matrix result = Matrix::identity(n);
  Matrix term = Matrix::identity(n);
  for (int k = 1; k <= 40; ++k) {
    term = scale(matmul(term, scaled), 1.0 / k);
    result = add(result, term);
    if (one_norm(term) < 1e-17) break;
  }
  for (int s = 0; s < squarings; ++s) result = matmul(result, result);
  return result;
}

}  // namespace local
