#pragma once

#include <vector>

#include "local/autodiff.hpp"
#include "local/matrix.hpp"

namespace local {

enum class LossKind { kQmle, kLse };

struct LossConfig {
  double lambda1 = 0.0;  // acyclicity weight, only without the mask
  double lambda2 = 0.01;
  LossKind kind = LossKind::kQmle;
  bool use_mask = true;

  void validate() const {
    if (lambda1 < 0.0 || lambda2 < 0.0)
      throw std::invalid_argument("LossConfig: negative penalty weight");
    if (use_mask && lambda1 != 0.0)
      throw std::invalid_argument("LossConfig: lambda1 must be 0 when the mask is enabled");
  }
};

struct LossValue {
  double total = 0.0;
  double data_term = 0.0;
  double logdet_term = 0.0;
  double sparsity_term = 0.0;
  double acyclicity_term = 0.0;
};

/// D = {I + diag(W^T W)}^{-1}, i.e. D[i,i] = 1 / (1 + ||column i of W||^2).
Matrix scaling_matrix_D(const Matrix& w);

/// R = X (I - w_eff) - Y A, one row per sample.
Matrix residual(const Matrix& x, const Matrix& y, const Matrix& w_eff, const Matrix& a);

LossValue qmle_loss(const Matrix& x, const Matrix& y, const Matrix& w_eff, const Matrix& a,
                    const LossConfig& cfg);
LossValue lse_loss(const Matrix& x, const Matrix& y, const Matrix& w_eff, const Matrix& a,
                   const LossConfig& cfg);

/// h(W) = tr(exp(W o W)) - d; zero exactly on acyclic supports.
double h_acyclicity(const Matrix& w);

/// Diagnostic alpha matrix: a_ij = ((w_ij + w_ji) - sum_k w_ki w_kj) /
/// (1 + sum_k w_ki^2), zero diagonal.
Matrix alpha_matrix(const Matrix& w);

/// Equal-variance noise estimate ||R||_F^2 / (n d).
double sigma_hat_sq(const Matrix& r);

/// Loss recorded on a tape; lagged blocks are kept separate so Y A is the
/// sum of per-lag products. Components are exposed for reporting.
struct LossVars {
  Var total;
  Var data_term;
  Var logdet_term;
  Var sparsity_term;
  Var acyclicity_term;
  bool has_acyclicity = false;
};

LossVars build_loss(Tape& tape, const Matrix& x, const std::vector<Matrix>& y_blocks,
                    Var w_eff, const std::vector<Var>& a_blocks, const LossConfig& cfg);

LossValue loss_values(const Tape& tape, const LossVars& v);

}  // namespace local
