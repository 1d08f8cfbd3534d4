#include "local/autodiff.hpp"

#include <cmath>

namespace local {

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Matrix value) { return push({Op::kLeaf, -1, -1, 0.0, std::move(value), {}}); }

Var Tape::matmul(Var a, Var b) {
  Matrix v = local::matmul(value(a), value(b));
  return push({Op::kMatMul, a.node, b.node, 0.0, std::move(v), {}});
}

Var Tape::transpose(Var a) {
  return push({Op::kTranspose, a.node, -1, 0.0, local::transpose(value(a)), {}});
}

Var Tape::hadamard(Var a, Var b) {
  return push({Op::kHadamard, a.node, b.node, 0.0, local::hadamard(value(a), value(b)), {}});
}

Var Tape::add(Var a, Var b) {
  return push({Op::kAdd, a.node, b.node, 0.0, local::add(value(a), value(b)), {}});
}

Var Tape::sub(Var a, Var b) {
  return push({Op::kSub, a.node, b.node, 0.0, local::sub(value(a), value(b)), {}});
}

Var Tape::scale(Var a, double c) {
  return push({Op::kScale, a.node, -1, c, local::scale(value(a), c), {}});
}

Var Tape::log_scalar(Var a) {
  const Matrix& x = value(a);
  if (x.rows != 1 || x.cols != 1) throw DimensionError("log_scalar: input must be 1x1");
  if (!(x(0, 0) > 0.0)) throw NumericError("log_scalar: input must be strictly positive");
  Matrix v(1, 1);
  v(0, 0) = std::log(x(0, 0));
  return push({Op::kLogScalar, a.node, -1, 0.0, std::move(v), {}});
}

Var Tape::frobenius_sq(Var a) {
  Matrix v(1, 1);
  v(0, 0) = frobenius_norm_sq(value(a));
  return push({Op::kFrobeniusSq, a.node, -1, 0.0, std::move(v), {}});
}

Var Tape::l1_smooth(Var a) {
  double s = 0.0;
  for (double x : value(a).data) s += std::sqrt(x * x + kL1SmoothEps);
  Matrix v(1, 1);
  v(0, 0) = s;
  return push({Op::kL1Smooth, a.node, -1, 0.0, std::move(v), {}});
}

Var Tape::sigmoid(Var a) {
  Matrix v = value(a);
  for (double& x : v.data) x = 1.0 / (1.0 + std::exp(-x));
  return push({Op::kSigmoid, a.node, -1, 0.0, std::move(v), {}});
}

Var Tape::log_abs_det(Var a) {
  Matrix v(1, 1);
  v(0, 0) = local::log_abs_det(value(a));
  return push({Op::kLogAbsDet, a.node, -1, 0.0, std::move(v), {}});
}

Var Tape::scaling_d(Var w) {
  const Matrix& m = value(w);
  if (m.rows != m.cols) throw DimensionError("scaling_d: matrix must be square");
  const int d = m.rows;
  Matrix v(d, d);
  for (int i = 0; i < d; ++i) {
    double s = 1.0;
    for (int j = 0; j < d; ++j) s += m(j, i) * m(j, i);
    v(i, i) = 1.0 / s;
  }
  return push({Op::kScalingD, w.node, -1, 0.0, std::move(v), {}});
}

Var Tape::pairwise_diff(Var p) {
  const Matrix& m = value(p);
  if (m.rows != 1) throw DimensionError("pairwise_diff: expects a 1xd row vector");
  const int d = m.cols;
  Matrix v(d, d);
  for (int u = 0; u < d; ++u)
    for (int w = 0; w < d; ++w) v(u, w) = m(0, w) - m(0, u);
  return push({Op::kPairwiseDiff, p.node, -1, 0.0, std::move(v), {}});
}

Var Tape::acyclicity_penalty(Var w) {
  const Matrix& m = value(w);
  if (m.rows != m.cols) throw DimensionError("acyclicity_penalty: matrix must be square");
  Matrix e = matrix_exponential(local::hadamard(m, m));
  Matrix v(1, 1);
  v(0, 0) = trace(e) - m.rows;
  return push({Op::kAcyclicityPenalty, w.node, -1, 0.0, std::move(v), std::move(e)});
}

std::vector<Matrix> Tape::backward(Var root) const {
  const Node& r = nodes_[root.node];
  if (r.value.rows != 1 || r.value.cols != 1)
    throw DimensionError("backward: root must be scalar");
  std::vector<Matrix> adj(nodes_.size());
  auto accum = [&](int id, const Matrix& g) {
    if (adj[id].data.empty())
      adj[id] = g;
    else
      adj[id] = local::add(adj[id], g);
  };
  adj[root.node] = Matrix::constant(1, 1, 1.0);
  for (int id = root.node; id >= 0; --id) {
    if (adj[id].data.empty()) continue;
    const Node& n = nodes_[id];
    const Matrix& g = adj[id];
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kMatMul:
        accum(n.a, local::matmul(g, local::transpose(nodes_[n.b].value)));
        accum(n.b, local::matmul(local::transpose(nodes_[n.a].value), g));
        break;
      case Op::kTranspose:
        accum(n.a, local::transpose(g));
        break;
      case Op::kHadamard:
        accum(n.a, local::hadamard(g, nodes_[n.b].value));
        accum(n.b, local::hadamard(g, nodes_[n.a].value));
        break;
      case Op::kAdd:
        accum(n.a, g);
        accum(n.b, g);
        break;
      case Op::kSub:
        accum(n.a, g);
        accum(n.b, local::scale(g, -1.0));
        break;
      case Op::kScale:
        accum(n.a, local::scale(g, n.aux));
        break;
      case Op::kLogScalar:
        accum(n.a, local::scale(g, 1.0 / nodes_[n.a].value(0, 0)));
        break;
      case Op::kFrobeniusSq:
        accum(n.a, local::scale(nodes_[n.a].value, 2.0 * g(0, 0)));
        break;
      case Op::kL1Smooth: {
        Matrix d = nodes_[n.a].value;
        for (double& x : d.data) x = x / std::sqrt(x * x + kL1SmoothEps);
        accum(n.a, local::scale(d, g(0, 0)));
        break;
      }
      case Op::kSigmoid: {
        Matrix d = n.value;
        for (double& x : d.data) x = x * (1.0 - x);
        accum(n.a, local::hadamard(g, d));
        break;
      }
      case Op::kLogAbsDet: {
        // d/dA log|det A| = (A^{-1})^T, obtained by solving A^T Z = I.
        Matrix inv_t = solve(local::transpose(nodes_[n.a].value),
                             Matrix::identity(nodes_[n.a].value.rows));
        accum(n.a, local::scale(inv_t, g(0, 0)));
        break;
      }
      case Op::kScalingD: {
        const Matrix& w = nodes_[n.a].value;
        const int d = w.rows;
        Matrix gw(d, d);
        for (int i = 0; i < d; ++i) {
          double dii = n.value(i, i);
          double gii = g(i, i);
          if (gii == 0.0) continue;
          for (int j = 0; j < d; ++j) gw(j, i) += gii * (-2.0 * w(j, i) * dii * dii);
        }
        accum(n.a, gw);
        break;
      }
      case Op::kPairwiseDiff: {
        const int d = n.value.rows;
        Matrix gp(1, d);
        for (int u = 0; u < d; ++u)
          for (int w = 0; w < d; ++w) {
            gp(0, w) += g(u, w);
            gp(0, u) -= g(u, w);
          }
        accum(n.a, gp);
        break;
      }
      case Op::kAcyclicityPenalty: {
        // d/dW tr(exp(WoW)) = exp(WoW)^T o 2W
        Matrix gw = local::hadamard(local::transpose(n.saved), local::scale(nodes_[n.a].value, 2.0));
        accum(n.a, local::scale(gw, g(0, 0)));
        break;
      }
    }
  }
  return adj;
}

double grad_check(const std::function<Var(Tape&, const std::vector<Var>&)>& build,
                  const std::vector<Matrix>& params, double eps) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tape.leaf(p));
  Var root = build(tape, vars);
  auto adj = tape.backward(root);

  auto eval = [&](const std::vector<Matrix>& pts) {
    Tape t;
    std::vector<Var> vs;
    vs.reserve(pts.size());
    for (const auto& p : pts) vs.push_back(t.leaf(p));
    return t.scalar(build(t, vs));
  };

  double worst = 0.0;
  std::vector<Matrix> probe = params;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    const Matrix& g = adj[vars[pi].node];
    for (size_t c = 0; c < params[pi].data.size(); ++c) {
      double orig = probe[pi].data[c];
      probe[pi].data[c] = orig + eps;
      double fp = eval(probe);
      probe[pi].data[c] = orig - eps;
      double fm = eval(probe);
      probe[pi].data[c] = orig;
      double numeric = (fp - fm) / (2.0 * eps);
      double analytic = g.data.empty() ? 0.0 : g.data[c];
      double err = std::fabs(analytic - numeric) /
                   (std::fabs(analytic) + std::fabs(numeric) + 1e-10);
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace local
