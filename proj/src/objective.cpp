#include "local/objective.hpp"

#include <cmath>

namespace local {

namespace {

double l1_smooth_sum(const Matrix& m) {
  double s = 0.0;
  for (double x : m.data) s += std::sqrt(x * x + kL1SmoothEps);
  return s;
}

}  // namespace

Matrix scaling_matrix_D(const Matrix& w) {
  if (w.rows != w.cols) throw DimensionError("scaling_matrix_D: matrix must be square");
  const int d = w.rows;
  Matrix out(d, d);
  for (int i = 0; i < d; ++i) {
    double s = 1.0;
    for (int j = 0; j < d; ++j) s += w(j, i) * w(j, i);
    out(i, i) = 1.0 / s;
  }
  return out;
}

Matrix residual(const Matrix& x, const Matrix& y, const Matrix& w_eff, const Matrix& a) {
  Matrix s = sub(Matrix::identity(w_eff.rows), w_eff);
  Matrix r = matmul(x, s);
  if (a.rows > 0) r = sub(r, matmul(y, a));
  return r;
}

LossValue qmle_loss(const Matrix& x, const Matrix& y, const Matrix& w_eff, const Matrix& a,
                    const LossConfig& cfg) {
  cfg.validate();
  const int d = x.cols;
  Matrix s = sub(Matrix::identity(d), w_eff);
  Matrix r = residual(x, y, w_eff, a);
  Matrix scaled = matmul(matmul(r, scaling_matrix_D(w_eff)), transpose(s));
  double sq = frobenius_norm_sq(scaled);
  if (!(sq > 0.0)) throw NumericError("qmle_loss: scaled residual is exactly zero");
  LossValue v;
  v.data_term = 0.5 * d * std::log(sq);
  v.logdet_term = log_abs_det(s);
  v.sparsity_term = cfg.lambda2 * (l1_smooth_sum(w_eff) + l1_smooth_sum(a));
  if (!cfg.use_mask && cfg.lambda1 > 0.0) v.acyclicity_term = cfg.lambda1 * h_acyclicity(w_eff);
  v.total = v.data_term - v.logdet_term + v.sparsity_term + v.acyclicity_term;
  return v;
}

LossValue lse_loss(const Matrix& x, const Matrix& y, const Matrix& w_eff, const Matrix& a,
                   const LossConfig& cfg) {
  cfg.validate();
  Matrix r = residual(x, y, w_eff, a);
  LossValue v;
  v.data_term = frobenius_norm_sq(r) / (2.0 * x.rows);
  v.logdet_term = 0.0;
  v.sparsity_term = cfg.lambda2 * (l1_smooth_sum(w_eff) + l1_smooth_sum(a));
  if (!cfg.use_mask && cfg.lambda1 > 0.0) v.acyclicity_term = cfg.lambda1 * h_acyclicity(w_eff);
  v.total = v.data_term - v.logdet_term + v.sparsity_term + v.acyclicity_term;
  return v;
}

double h_acyclicity(const Matrix& w) {
  if (w.rows != w.cols) throw DimensionError("h_acyclicity: matrix must be square");
  return trace(matrix_exponential(hadamard(w, w))) - w.rows;
}

Matrix alpha_matrix(const Matrix& w) {
  if (w.rows != w.cols) throw DimensionError("alpha_matrix: matrix must be square");
  const int d = w.rows;
  Matrix out(d, d);
  for (int i = 0; i < d; ++i) {
    double denom = 1.0;
    for (int k = 0; k < d; ++k) denom += w(k, i) * w(k, i);
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      double cross = 0.0;
      for (int k = 0; k < d; ++k) cross += w(k, i) * w(k, j);
      out(i, j) = ((w(i, j) + w(j, i)) - cross) / denom;
    }
  }
  return out;
}

double sigma_hat_sq(const Matrix& r) {
  return frobenius_norm_sq(r) / (static_cast<double>(r.rows) * r.cols);
}

LossVars build_loss(Tape& tape, const Matrix& x, const std::vector<Matrix>& y_blocks,
                    Var w_eff, const std::vector<Var>& a_blocks, const LossConfig& cfg) {
  cfg.validate();
  if (y_blocks.size() != a_blocks.size())
    throw DimensionError("build_loss: lag block count mismatch");
  const int d = x.cols;

  Var x_leaf = tape.leaf(x);
  Var s = tape.sub(tape.leaf(Matrix::identity(d)), w_eff);
  Var r = tape.matmul(x_leaf, s);
  for (size_t j = 0; j < a_blocks.size(); ++j)
    r = tape.sub(r, tape.matmul(tape.leaf(y_blocks[j]), a_blocks[j]));

  LossVars out;
  Var zero = tape.leaf(Matrix(1, 1));
  if (cfg.kind == LossKind::kQmle) {
    Var scaled = tape.matmul(tape.matmul(r, tape.scaling_d(w_eff)), tape.transpose(s));
    out.data_term = tape.scale(tape.log_scalar(tape.frobenius_sq(scaled)), 0.5 * d);
    out.logdet_term = tape.log_abs_det(s);
  } else {
    out.data_term = tape.scale(tape.frobenius_sq(r), 1.0 / (2.0 * x.rows));
    out.logdet_term = zero;
  }

  Var l1 = tape.l1_smooth(w_eff);
  for (Var a : a_blocks) l1 = tape.add(l1, tape.l1_smooth(a));
  out.sparsity_term = tape.scale(l1, cfg.lambda2);

  out.total = tape.add(tape.sub(out.data_term, out.logdet_term), out.sparsity_term);
  if (!cfg.use_mask && cfg.lambda1 > 0.0) {
    out.acyclicity_term = tape.scale(tape.acyclicity_penalty(w_eff), cfg.lambda1);
    out.total = tape.add(out.total, out.acyclicity_term);
    out.has_acyclicity = true;
  } else {
    out.acyclicity_term = zero;
  }
  return out;
}

LossValue loss_values(const Tape& tape, const LossVars& v) {
  LossValue out;
  out.total = tape.scalar(v.total);
  out.data_term = tape.scalar(v.data_term);
  out.logdet_term = tape.scalar(v.logdet_term);
  out.sparsity_term = tape.scalar(v.sparsity_term);
  out.acyclicity_term = tape.scalar(v.acyclicity_term);
  return out;
}

}  // namespace local
