#pragma once

#include <vector>

#include "local/acml.hpp"
#include "local/linalg.hpp"
#include "local/matrix.hpp"

namespace local {

/// Source/target embedding dictionaries. Slice 0 is the instantaneous graph,
/// slice j (1..lag_order) the lag-j graph.
struct EmbeddingDictionaries {
  std::vector<Matrix> e_so;  // lag_order+1 matrices, each d x k
  std::vector<Matrix> e_to;
  int lag_order = 0;
  int embed_dim = 1;

  EmbeddingDictionaries(int d, int k, int p)
      : e_so(p + 1, Matrix(d, k)), e_to(p + 1, Matrix(d, k)), lag_order(p), embed_dim(k) {}
};

/// Default k = round(2d/5), clamped to [1, d].
int default_embed_dim(int d);

/// Gaussian init, std 1/sqrt(k), keeping the initial product O(1).
EmbeddingDictionaries init_embeddings(int d, int k, int p, Rng& rng);

/// W = E_so(t) E_to(t)^T, rank <= k by construction.
Matrix assemble_instantaneous(const EmbeddingDictionaries& e);

/// Vertical stack [A_1; ...; A_p] with A_j = E_so(t-j) E_to(t-j)^T,
/// conformant with Y = [X_{t-1} | ... | X_{t-p}].
Matrix assemble_lagged(const EmbeddingDictionaries& e);

Matrix masked_instantaneous(const EmbeddingDictionaries& e, const Matrix& mask);

}  // namespace local
