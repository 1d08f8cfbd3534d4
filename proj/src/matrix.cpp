#include "local/matrix.hpp"

#include <cmath>

namespace local {

bool all_finite(const Matrix& a) {
  for (double x : a.data)
    if (!std::isfinite(x)) return false;
  return true;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

static void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows) + "x" +
                         std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                         std::to_string(b.cols) + ")");
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix r = a;
  for (size_t i = 0; i < r.data.size(); ++i) r.data[i] += b.data[i];
  return r;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "sub");
  Matrix r = a;
  for (size_t i = 0; i < r.data.size(); ++i) r.data[i] -= b.data[i];
  return r;
}

Matrix scale(const Matrix& a, double c) {
  Matrix r = a;
  for (double& x : r.data) x *= c;
  return r;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix r = a;
  for (size_t i = 0; i < r.data.size(); ++i) r.data[i] *= b.data[i];
  return r;
}

double frobenius_norm_sq(const Matrix& a) {
  double s = 0.0;
  for (double x : a.data) s += x * x;
  return s;
}

double l1_norm(const Matrix& a) {
  double s = 0.0;
  for (double x : a.data) s += std::fabs(x);
  return s;
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double x : a.data) m = std::max(m, std::fabs(x));
  return m;
}

double one_norm(const Matrix& a) {
  double best = 0.0;
  for (int j = 0; j < a.cols; ++j) {
    double s = 0.0;
    for (int i = 0; i < a.rows; ++i) s += std::fabs(a(i, j));
    best = std::max(best, s);
  }
  return best;
}

double trace(const Matrix& a) {
  double s = 0.0;
  int n = std::min(a.rows, a.cols);
  for (int i = 0; i < n; ++i) s += a(i, i);
  return s;
}

}  // namespace local
