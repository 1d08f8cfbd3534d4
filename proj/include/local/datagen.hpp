#pragma once

#include <vector>

#include "local/acml.hpp"
#include "local/matrix.hpp"

namespace local {

struct GraphSpec {
  int d = 10;
  int lag = 1;
  double mean_degree = 1.0;
  double lag_density = -1.0;  // < 0 means default 1/d
  double eta = 1.5;
  unsigned long long seed = 0;
};

struct GroundTruth {
  Matrix w_true;
  std::vector<Matrix> a_true;
  Matrix w_support;
  std::vector<Matrix> a_support;
};

struct SeriesConfig {
  int length = 1000;
  int burn_in = 100;
  double noise_std = 1.0;
  unsigned long long seed = 0;
};

/// Erdos-Renyi DAG: random topological order, each order-respecting pair
/// included with probability mean_degree * d / (d(d-1)/2).
Matrix sample_er_dag(int d, double mean_degree, Rng& rng);

/// Uniform weights on [-2.0,-0.5] u [0.5,2.0] over the support.
Matrix sample_instantaneous_weights(const Matrix& support, Rng& rng);

/// Lag-k blocks: Bernoulli(lag_density) support, weights uniform on
/// [-1.0a,-0.25a] u [0.25a,2.0a] with a = 1/eta^k.
std::vector<Matrix> sample_lagged_weights(int d, int p, double lag_density, double eta, Rng& rng);

GroundTruth sample_ground_truth(const GraphSpec& spec);

/// Simulate X_t = (Y_t A + N_t) S^{-1}; returns the last `length` rows.
Matrix simulate(const GroundTruth& gt, const SeriesConfig& cfg, Rng& rng);

/// Power-iteration spectral radius of the reduced-form VAR companion matrix.
double stability_estimate(const std::vector<Matrix>& a_true, const Matrix& w_true);

/// Ground truth plus series; unstable draws are rescaled by 0.9 (up to 5x).
struct Instance {
  GroundTruth truth;
  Matrix series;
};

Instance generate_instance(const GraphSpec& spec, const SeriesConfig& series_cfg);

/// DFS check used by tests and the mask invariants.
bool is_acyclic(const Matrix& adjacency);

}  // namespace local
