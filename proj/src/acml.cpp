#include "local/acml.hpp"

#include <algorithm>
#include <cmath>

namespace local {

namespace {
double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

Matrix sample_gumbel(Rng& rng, int rows, int cols) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix g(rows, cols);
  for (double& x : g.data) {
    double u = std::clamp(unif(rng), 1e-12, 1.0 - 1e-12);
    x = -std::log(-std::log(u));
  }
  return g;
}

Matrix orientation_matrix(const PriorityVector& p, const MaskConfig& cfg, Rng& rng) {
  cfg.validate();
  const int d = p.size();
  Matrix m(d, d);
  for (int u = 0; u < d; ++u)
    for (int v = 0; v < d; ++v) {
      if (u == v) continue;
      double delta = p.p[v] - p.p[u] - cfg.omega;
      switch (cfg.mode) {
        case MaskMode::kStochastic: {
          Matrix g = sample_gumbel(rng, 1, 2);
          m(u, v) = logistic((delta + g(0, 0) - g(0, 1)) / cfg.tau);
          break;
        }
        case MaskMode::kSoftDeterministic:
          m(u, v) = logistic(delta / cfg.tau);
          break;
        case MaskMode::kHard:
          m(u, v) = delta > 0.0 ? 1.0 : 0.0;
          break;
      }
    }
  return m;
}

Matrix hard_mask_from(const PriorityVector& p, double omega) {
  if (!(omega > 0.0)) throw std::invalid_argument("hard_mask_from: omega must be > 0");
  const int d = p.size();
  Matrix m(d, d);
  for (int u = 0; u < d; ++u)
    for (int v = 0; v < d; ++v)
      if (u != v && p.p[v] - p.p[u] > omega) m(u, v) = 1.0;
  return m;
}

Var orientation_on_tape(Tape& tape, Var priority, const MaskConfig& cfg, Rng& rng) {
  cfg.validate();
  const int d = tape.value(priority).cols;
  Matrix shift = Matrix::constant(d, d, -cfg.omega);
  if (cfg.mode == MaskMode::kStochastic) {
    Matrix g1 = sample_gumbel(rng, d, d);
    Matrix g2 = sample_gumbel(rng, d, d);
    shift = add(shift, sub(g1, g2));
  }
  Var logits = tape.scale(tape.add(tape.pairwise_diff(priority), tape.leaf(shift)), 1.0 / cfg.tau);
  Matrix offdiag = Matrix::constant(d, d, 1.0);
  for (int i = 0; i < d; ++i) offdiag(i, i) = 0.0;
  return tape.hadamard(tape.sigmoid(logits), tape.leaf(offdiag));
}

}  // namespace local
