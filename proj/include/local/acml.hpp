#pragma once

#include <random>

#include "local/autodiff.hpp"
#include "local/matrix.hpp"

namespace local {

using Rng = std::mt19937_64;

/// Per-node priority scores; edges run from lower to strictly higher
/// priority with margin omega.
struct PriorityVector {
  std::vector<double> p;

  explicit PriorityVector(int d) : p(d, 1.0) {}
  int size() const { return static_cast<int>(p.size()); }
};

enum class MaskMode { kStochastic, kSoftDeterministic, kHard };

struct MaskConfig {
  double omega = 0.01;
  double tau = 1.0;
  MaskMode mode = MaskMode::kStochastic;

  void validate() const {
    if (!(omega > 0.0)) throw std::invalid_argument("MaskConfig: omega must be > 0");
    if (!(tau > 0.0)) throw std::invalid_argument("MaskConfig: tau must be > 0");
  }
};

/// Standard Gumbel draws, -log(-log(u)) with u clamped into (0,1).
Matrix sample_gumbel(Rng& rng, int rows, int cols);

/// Orientation matrix M with entries in [0,1] and zero diagonal.
Matrix orientation_matrix(const PriorityVector& p, const MaskConfig& cfg, Rng& rng);

/// Binary orientation indicator [p_v - p_u > omega], zero diagonal.
Matrix hard_mask_from(const PriorityVector& p, double omega);

/// Tape version of the stochastic / soft-deterministic orientation matrix.
/// Gumbel noise enters as a constant; gradients reach p through the sigmoid.
Var orientation_on_tape(Tape& tape, Var priority, const MaskConfig& cfg, Rng& rng);

}  // namespace local
