#pragma once

#include <functional>
#include <vector>

#include "local/linalg.hpp"
#include "local/matrix.hpp"

namespace local {

/// Handle into a Tape. Scalars are 1x1 matrices.
struct Var {
  int node = -1;
};

inline constexpr double kL1SmoothEps = 1e-8;

/// Append-only reverse-mode tape over Matrix values. Single-threaded per
/// instance; independent tapes may run concurrently.
class Tape {
 public:
  enum class Op {
    kLeaf,
    kMatMul,
    kTranspose,
    kHadamard,
    kAdd,
    kSub,
    kScale,
    kLogScalar,
    kFrobeniusSq,
    kL1Smooth,
    kSigmoid,
    kLogAbsDet,
    kScalingD,
    kPairwiseDiff,
    kAcyclicityPenalty,
  };

  Var leaf(Matrix value);

  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var hadamard(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scale(Var a, double c);

  /// log of a strictly positive 1x1 value.
  Var log_scalar(Var a);
  Var frobenius_sq(Var a);
  /// Smoothed L1: sum sqrt(x^2 + eps), differentiable at 0.
  Var l1_smooth(Var a);
  Var sigmoid(Var a);
  Var log_abs_det(Var a);
  /// Diagonal D with D[i,i] = 1 / (1 + sum_j w[j,i]^2).
  Var scaling_d(Var w);
  /// From a 1xd vector p, the dxd matrix with entry (u,v) = p[v] - p[u].
  Var pairwise_diff(Var p);
  /// tr(exp(W o W)) - d, the differentiable acyclicity penalty.
  Var acyclicity_penalty(Var w);

  const Matrix& value(Var v) const { return nodes_[v.node].value; }
  double scalar(Var v) const { return nodes_[v.node].value(0, 0); }
  size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  /// Reverse sweep from a scalar root; adjoint per node id (empty = zero).
  std::vector<Matrix> backward(Var root) const;

 private:
  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    double aux = 0.0;
    Matrix value;
    Matrix saved;  // op-specific forward cache (e.g. exp(WoW))
  };

  Var push(Node n);
  std::vector<Node> nodes_;
};

/// Max relative error of analytic gradients against central finite
/// differences over every coordinate of every parameter.
double grad_check(const std::function<Var(Tape&, const std::vector<Var>&)>& build,
                  const std::vector<Matrix>& params, double eps);

}  // namespace local
