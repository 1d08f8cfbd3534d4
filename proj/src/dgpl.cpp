#include "local/dgpl.hpp"

#include <cmath>

namespace local {

int default_embed_dim(int d) {
  int k = static_cast<int>(std::lround(2.0 * d / 5.0));
  return std::max(1, std::min(k, d));
}

EmbeddingDictionaries init_embeddings(int d, int k, int p, Rng& rng) {
  EmbeddingDictionaries e(d, k, p);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(k)));
  for (auto* dict : {&e.e_so, &e.e_to})
    for (auto& slice : *dict)
      for (double& x : slice.data) x = gauss(rng);
  return e;
}

Matrix assemble_instantaneous(const EmbeddingDictionaries& e) {
  return matmul(e.e_so[0], transpose(e.e_to[0]));
}

Matrix assemble_lagged(const EmbeddingDictionaries& e) {
  const int d = e.e_so[0].rows;
  Matrix stacked(e.lag_order * d, d);
  for (int j = 1; j <= e.lag_order; ++j) {
    Matrix block = matmul(e.e_so[j], transpose(e.e_to[j]));
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) stacked((j - 1) * d + r, c) = block(r, c);
  }
  return stacked;
}

Matrix masked_instantaneous(const EmbeddingDictionaries& e, const Matrix& mask) {
  return hadamard(assemble_instantaneous(e), mask);
}

}  // namespace local
