#include "local/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "local/linalg.hpp"

namespace local {

bool is_acyclic(const Matrix& adjacency) {
  const int d = adjacency.rows;
  std::vector<int> state(d, 0);  // 0 unseen, 1 on stack, 2 done
  std::vector<int> stack;
  for (int start = 0; start < d; ++start) {
    if (state[start] != 0) continue;
    stack.push_back(start);
    while (!stack.empty()) {
      int u = stack.back();
      if (state[u] == 0) {
        state[u] = 1;
        for (int v = 0; v < d; ++v) {
          if (adjacency(u, v) == 0.0) continue;
          if (state[v] == 1) return false;
          if (state[v] == 0) stack.push_back(v);
        }
      } else {
        state[u] = 2;
        stack.pop_back();
      }
    }
  }
  return true;
}

Matrix sample_er_dag(int d, double mean_degree, Rng& rng) {
  const double max_edges = d * (d - 1) / 2.0;
  const double q = mean_degree * d / max_edges;
  if (q > 1.0) throw std::invalid_argument("sample_er_dag: infeasible edge density");
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (unif(rng) < q) g(order[i], order[j]) = 1.0;
  return g;
}

namespace {

// Uniform over [lo_neg, hi_neg] u [lo_pos, hi_pos], mass split by interval length.
double union_uniform(double lo_neg, double hi_neg, double lo_pos, double hi_pos, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double len_neg = hi_neg - lo_neg;
  double len_pos = hi_pos - lo_pos;
  double u = unif(rng) * (len_neg + len_pos);
  return u < len_neg ? lo_neg + u : lo_pos + (u - len_neg);
}

// Worst-case stationary variance of the instantaneous part: unit noise maps
// through S^-1, so the largest squared column norm bounds the marginal
// variance a node can reach from the within-step cascade alone.
double noise_amplification(const Matrix& w) {
  Matrix s_inv = inverse(sub(Matrix::identity(w.rows), w));
  double worst = 0.0;
  for (int j = 0; j < s_inv.cols; ++j) {
    double ss = 0.0;
    for (int i = 0; i < s_inv.rows; ++i) ss += s_inv(i, j) * s_inv(i, j);
    worst = std::max(worst, ss);
  }
  return worst;
}

}  // namespace

Matrix sample_instantaneous_weights(const Matrix& support, Rng& rng) {
  Matrix w(support.rows, support.cols);
  for (size_t i = 0; i < support.data.size(); ++i)
    if (support.data[i] != 0.0) w.data[i] = union_uniform(-2.0, -0.5, 0.5, 2.0, rng);
  return w;
}

std::vector<Matrix> sample_lagged_weights(int d, int p, double lag_density, double eta,
                                          Rng& rng) {
  if (lag_density < 0.0 || lag_density > 1.0)
    throw std::invalid_argument("sample_lagged_weights: density outside [0,1]");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Matrix> blocks;
  for (int k = 1; k <= p; ++k) {
    double alpha = 1.0 / std::pow(eta, k);
    Matrix a(d, d);
    for (double& x : a.data)
      if (unif(rng) < lag_density)
        x = union_uniform(-1.0 * alpha, -0.25 * alpha, 0.25 * alpha, 2.0 * alpha, rng);
    blocks.push_back(std::move(a));
  }
  return blocks;
}

double stability_estimate(const std::vector<Matrix>& a_true, const Matrix& w_true) {
  const int p = static_cast<int>(a_true.size());
  const int d = w_true.rows;
  if (p == 0) return 0.0;
  // reduced form: X_t = sum_k X_{t-k} B_k with B_k = A_k S^{-1}
  Matrix s_inv = inverse(sub(Matrix::identity(d), w_true));
  std::vector<Matrix> b;
  b.reserve(p);
  for (const auto& a : a_true) b.push_back(matmul(a, s_inv));
  // companion matrix acting on [X_{t-1}, ..., X_{t-p}] row blocks
  const int n = p * d;
  Matrix comp(n, n);
  for (int k = 0; k < p; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) comp(k * d + i, j) = b[k](i, j);
  for (int k = 1; k < p; ++k)
    for (int i = 0; i < d; ++i) comp((k - 1) * d + i, k * d + i) = 1.0;
  Matrix vec = Matrix::constant(n, 1, 1.0 / std::sqrt(static_cast<double>(n)));
  double radius = 0.0;
  for (int it = 0; it < 200; ++it) {
    Matrix next = matmul(transpose(comp), vec);
    double norm = std::sqrt(frobenius_norm_sq(next));
    if (norm < 1e-300) return 0.0;
    radius = norm;
    vec = scale(next, 1.0 / norm);
  }
  return radius;
}

GroundTruth sample_ground_truth(const GraphSpec& spec) {
  Rng rng(spec.seed);
  double lag_density = spec.lag_density >= 0.0 ? spec.lag_density : 1.0 / spec.d;
  GroundTruth gt;
  // An unlucky deep cascade can amplify unit noise by many orders of
  // magnitude while staying stationary; such draws are useless as
  // benchmarks, so they are redrawn (deterministically, same stream).
  const double amp_cap = 400.0;
  for (int attempt = 0; attempt < 32; ++attempt) {
    gt = GroundTruth{};
    gt.w_support = sample_er_dag(spec.d, spec.mean_degree, rng);
    gt.w_true = sample_instantaneous_weights(gt.w_support, rng);
    gt.a_true = sample_lagged_weights(spec.d, spec.lag, lag_density, spec.eta, rng);
    for (const auto& a : gt.a_true) {
      Matrix s(spec.d, spec.d);
      for (size_t i = 0; i < a.data.size(); ++i) s.data[i] = a.data[i] != 0.0 ? 1.0 : 0.0;
      gt.a_support.push_back(std::move(s));
    }
    // keep the reduced-form VAR stationary
    for (int retry = 0; retry < 5 && stability_estimate(gt.a_true, gt.w_true) >= 1.0; ++retry) {
      for (auto& a : gt.a_true)
        for (double& x : a.data) x *= 0.9;
      for (double& x : gt.w_true.data) x *= 0.9;
    }
    if (stability_estimate(gt.a_true, gt.w_true) >= 1.0 ||
        noise_amplification(gt.w_true) > amp_cap)
      continue;
    // The spectral radius misses non-normal transient growth through the
    // lag coupling, so also probe a short trajectory.
    bool probe_ok = true;
    try {
      SeriesConfig probe;
      probe.length = 200;
      Rng probe_rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
      Matrix traj = simulate(gt, probe, probe_rng);
      for (int j = 0; j < traj.cols && probe_ok; ++j) {
        double ss = 0.0;
        for (int i = 0; i < traj.rows; ++i) ss += traj(i, j) * traj(i, j);
        if (!(std::sqrt(ss / traj.rows) <= 100.0)) probe_ok = false;
      }
    } catch (const NumericError&) {
      probe_ok = false;
    }
    if (probe_ok) break;
  }
  return gt;
}

Matrix simulate(const GroundTruth& gt, const SeriesConfig& cfg, Rng& rng) {
  const int d = gt.w_true.rows;
  const int p = static_cast<int>(gt.a_true.size());
  if (cfg.length < p + 1) throw std::invalid_argument("simulate: series shorter than lag+1");
  std::normal_distribution<double> noise(0.0, cfg.noise_std);
  LUFactors s_t = lu_decompose(transpose(sub(Matrix::identity(d), gt.w_true)));

  const int total = p + cfg.burn_in + cfg.length;
  Matrix traj(total, d);
  for (int t = 0; t < p; ++t)
    for (int j = 0; j < d; ++j) traj(t, j) = noise(rng);
  Matrix rhs(d, 1);
  for (int t = p; t < total; ++t) {
    for (int j = 0; j < d; ++j) rhs(j, 0) = noise(rng);
    for (int k = 1; k <= p; ++k) {
      const Matrix& a = gt.a_true[k - 1];
      for (int i = 0; i < d; ++i) {
        double xi = traj(t - k, i);
        if (xi == 0.0) continue;
        for (int j = 0; j < d; ++j) rhs(j, 0) += xi * a(i, j);
      }
    }
    Matrix xt = lu_solve(s_t, rhs);  // S^T x^T = (Y A + N)^T
    for (int j = 0; j < d; ++j) {
      if (!std::isfinite(xt(j, 0)))
        throw NumericError("simulate: trajectory diverged (spectral radius estimate " +
                           std::to_string(stability_estimate(gt.a_true, gt.w_true)) + ")");
      traj(t, j) = xt(j, 0);
    }
  }
  Matrix out(cfg.length, d);
  for (int t = 0; t < cfg.length; ++t)
    for (int j = 0; j < d; ++j) out(t, j) = traj(p + cfg.burn_in + t, j);
  return out;
}

Instance generate_instance(const GraphSpec& spec, const SeriesConfig& series_cfg) {
  Instance inst;
  inst.truth = sample_ground_truth(spec);
  Rng rng(series_cfg.seed);
  inst.series = simulate(inst.truth, series_cfg, rng);
  return inst;
}

}  // namespace local
