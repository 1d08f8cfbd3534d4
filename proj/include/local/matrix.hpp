#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace local {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SingularError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
  Matrix(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != static_cast<size_t>(r) * c)
      throw DimensionError("Matrix: data length does not match shape");
  }

  double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

  size_t size() const { return data.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Matrix constant(int r, int c, double v) {
    Matrix m(r, c);
    for (auto& x : m.data) x = v;
    return m;
  }
};

bool all_finite(const Matrix& a);

Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);
Matrix hadamard(const Matrix& a, const Matrix& b);

double frobenius_norm_sq(const Matrix& a);
double l1_norm(const Matrix& a);
double max_abs(const Matrix& a);
double one_norm(const Matrix& a);  // max column sum of |a|
double trace(const Matrix& a);

}  // namespace local
