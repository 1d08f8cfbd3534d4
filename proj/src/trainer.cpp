#include "local/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

namespace local {

TimeSeriesDataset make_samples(const std::vector<Matrix>& series, int lag) {
  if (series.empty()) throw DimensionError("make_samples: no series given");
  const int d = series[0].cols;
  int n = 0;
  for (size_t s = 0; s < series.size(); ++s) {
    if (series[s].cols != d) throw DimensionError("make_samples: inconsistent column count");
    if (series[s].rows <= lag)
      throw DimensionError("make_samples: series " + std::to_string(s) +
                           " shorter than lag+1");
    n += series[s].rows - lag;
  }
  TimeSeriesDataset ds;
  ds.lag = lag;
  ds.x = Matrix(n, d);
  ds.y = Matrix(n, lag * d);
  int row = 0;
  for (const Matrix& m : series) {
    for (int t = lag; t < m.rows; ++t, ++row) {
      for (int j = 0; j < d; ++j) ds.x(row, j) = m(t, j);
      for (int l = 1; l <= lag; ++l)
        for (int j = 0; j < d; ++j) ds.y(row, (l - 1) * d + j) = m(t - l, j);
    }
  }
  return ds;
}

void AdamState::init(const std::vector<Matrix>& params) {
  m.clear();
  v.clear();
  for (const auto& p : params) {
    m.emplace_back(p.rows, p.cols);
    v.emplace_back(p.rows, p.cols);
  }
  t = 0;
}

void AdamState::step(std::vector<Matrix>& params, const std::vector<Matrix>& grads) {
  for (const auto& g : grads)
    if (!g.data.empty() && !all_finite(g))
      throw NumericError("adam_step: non-finite gradient");
  ++t;
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);
  for (size_t i = 0; i < params.size(); ++i) {
    if (grads[i].data.empty()) continue;  // unreachable leaf, zero gradient
    for (size_t c = 0; c < params[i].data.size(); ++c) {
      double g = grads[i].data[c];
      m[i].data[c] = beta1 * m[i].data[c] + (1.0 - beta1) * g;
      v[i].data[c] = beta2 * v[i].data[c] + (1.0 - beta2) * g * g;
      double mhat = m[i].data[c] / bc1;
      double vhat = v[i].data[c] / bc2;
      double scale = lr_scale.empty() ? 1.0 : lr_scale[i];
      params[i].data[c] -= lr * scale * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

Ablation ablation_from_string(const std::string& s) {
  if (s == "none") return Ablation::kNone;
  if (s == "no-dgpl") return Ablation::kNoDgpl;
  if (s == "no-acml") return Ablation::kNoAcml;
  if (s == "no-qmle") return Ablation::kNoQmle;
  throw std::invalid_argument("unknown ablation: " + s);
}

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::kNone: return "none";
    case Ablation::kNoDgpl: return "no-dgpl";
    case Ablation::kNoAcml: return "no-acml";
    case Ablation::kNoQmle: return "no-qmle";
  }
  return "none";
}

Matrix threshold_graph(const Matrix& w, double thr, bool zero_diagonal) {
  if (thr < 0.0) throw std::invalid_argument("threshold_graph: negative threshold");
  Matrix b(w.rows, w.cols);
  for (int i = 0; i < w.rows; ++i)
    for (int j = 0; j < w.cols; ++j)
      if ((i != j || !zero_diagonal) && std::fabs(w(i, j)) > thr) b(i, j) = 1.0;
  return b;
}

namespace {

void center_columns(Matrix& m) {
  for (int j = 0; j < m.cols; ++j) {
    double mean = 0.0;
    for (int i = 0; i < m.rows; ++i) mean += m(i, j);
    mean /= m.rows;
    for (int i = 0; i < m.rows; ++i) m(i, j) -= mean;
  }
}

// Divides every column by its standard deviation and returns the scales.
// Deep instantaneous cascades amplify marginal variances by orders of
// magnitude, which wrecks the conditioning of the optimization; training
// runs on the standardized scale and the estimates transform back exactly.
std::vector<double> standardize_columns(Matrix& m) {
  std::vector<double> scale(m.cols, 1.0);
  for (int j = 0; j < m.cols; ++j) {
    double ss = 0.0;
    for (int i = 0; i < m.rows; ++i) ss += m(i, j) * m(i, j);
    double sd = std::sqrt(ss / m.rows);
    if (sd > 0.0) {
      scale[j] = sd;
      for (int i = 0; i < m.rows; ++i) m(i, j) /= sd;
    }
  }
  return scale;
}

Matrix gather_rows(const Matrix& m, const std::vector<int>& idx, int begin, int end) {
  Matrix out(end - begin, m.cols);
  for (int r = begin; r < end; ++r)
    for (int j = 0; j < m.cols; ++j) out(r - begin, j) = m(idx[r], j);
  return out;
}

std::vector<Matrix> split_lag_blocks(const Matrix& y, int lag, int d) {
  std::vector<Matrix> blocks;
  blocks.reserve(lag);
  for (int l = 0; l < lag; ++l) {
    Matrix b(y.rows, d);
    for (int i = 0; i < y.rows; ++i)
      for (int j = 0; j < d; ++j) b(i, j) = y(i, l * d + j);
    blocks.push_back(std::move(b));
  }
  return blocks;
}

struct ParamLayout {
  bool low_rank = true;
  bool masked = true;
  int lag = 0;
  // low-rank: params are [so_0..so_p, to_0..to_p, (priority)]
  // direct:   params are [w, a_1..a_p, (priority)]
  int priority_index = -1;
};

// Scores a topological ordering by per-node regression: each node is fit by
// OLS on its permitted predecessors plus every lag column, the fit is pruned
// at the decision threshold and refit, and the pruned fits are summed into a
// Gaussian BIC. Used to polish the learned ordering before the mask hardens.
class OrderScorer {
 public:
  // x and y_blocks are standardized; the scales convert fitted coefficients
  // back to original units so the prune threshold keeps its meaning.
  OrderScorer(const Matrix& x, const std::vector<Matrix>& y_blocks, double thr,
              const std::vector<double>& x_scale, const std::vector<double>& y_scale)
      : x_(x), yb_(y_blocks), thr_(thr), x_scale_(x_scale), y_scale_(y_scale),
        d_(x.cols), n_(x.rows) {}

  double total(const std::vector<int>& pos) {
    double s = 0.0;
    for (int i = 0; i < d_; ++i) {
      std::vector<int> preds;
      for (int j = 0; j < d_; ++j)
        if (j != i && pos[j] < pos[i]) preds.push_back(j);
      s += node_bic(i, preds);
    }
    return s;
  }

 private:
  double node_bic(int i, const std::vector<int>& preds) {
    auto key = std::make_pair(i, preds);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    const int lag_cols = d_ * static_cast<int>(yb_.size());
    std::vector<double> beta = ols(i, preds, lag_cols);
    std::vector<int> keep_p, keep_l;
    for (size_t c = 0; c < preds.size(); ++c)
      if (std::fabs(beta[c]) * x_scale_[i] / x_scale_[preds[c]] > thr_)
        keep_p.push_back(preds[c]);
    for (int c = 0; c < lag_cols; ++c)
      if (std::fabs(beta[preds.size() + c]) * x_scale_[i] / y_scale_[c] > thr_)
        keep_l.push_back(c);

    const int m = static_cast<int>(keep_p.size() + keep_l.size());
    Matrix z(n_, m);
    for (int r = 0; r < n_; ++r) {
      int c = 0;
      for (int j : keep_p) z(r, c++) = x_(r, j);
      for (int lj : keep_l) z(r, c++) = yb_[lj / d_](r, lj % d_);
    }
    std::vector<double> beta2 = m > 0 ? solve_beta(z, i) : std::vector<double>{};
    double rss = 0.0;
    for (int r = 0; r < n_; ++r) {
      double pred = 0.0;
      for (int c = 0; c < m; ++c) pred += z(r, c) * beta2[c];
      double e = x_(r, i) - pred;
      rss += e * e;
    }
    double bic = n_ * std::log(rss / n_ + 1e-12) + std::log(static_cast<double>(n_)) * m;
    cache_.emplace(std::move(key), bic);
    return bic;
  }

  std::vector<double> ols(int i, const std::vector<int>& preds, int lag_cols) {
    Matrix z(n_, static_cast<int>(preds.size()) + lag_cols);
    for (int r = 0; r < n_; ++r) {
      int c = 0;
      for (int j : preds) z(r, c++) = x_(r, j);
      for (const auto& b : yb_)
        for (int j = 0; j < d_; ++j) z(r, c++) = b(r, j);
    }
    return solve_beta(z, i);
  }

  std::vector<double> solve_beta(const Matrix& z, int i) {
    Matrix zt = transpose(z);
    Matrix gram = matmul(zt, z);
    double ridge = 1e-8;
    for (int c = 0; c < gram.rows; ++c) ridge = std::max(ridge, 1e-8 * gram(c, c));
    for (int c = 0; c < gram.rows; ++c) gram(c, c) += ridge;
    Matrix xi(n_, 1);
    for (int r = 0; r < n_; ++r) xi(r, 0) = x_(r, i);
    Matrix b = solve(gram, matmul(zt, xi));
    std::vector<double> out(b.rows);
    for (int c = 0; c < b.rows; ++c) out[c] = b(c, 0);
    return out;
  }

  const Matrix& x_;
  const std::vector<Matrix>& yb_;
  double thr_;
  const std::vector<double>& x_scale_;
  const std::vector<double>& y_scale_;
  int d_, n_;
  std::map<std::pair<int, std::vector<int>>, double> cache_;
};

// First-improvement hill climb over node relocations within a small window.
std::vector<int> polish_order(OrderScorer& scorer, std::vector<int> pos) {
  const int d = static_cast<int>(pos.size());
  const int window = 5;
  double best = scorer.total(pos);
  bool improved = true;
  for (int pass = 0; pass < 20 && improved; ++pass) {
    improved = false;
    for (int node = 0; node < d; ++node) {
      for (int delta = -window; delta <= window; ++delta) {
        int newpos = pos[node] + delta;
        if (delta == 0 || newpos < 0 || newpos >= d) continue;
        std::vector<int> cand = pos;
        int old = cand[node];
        for (int j = 0; j < d; ++j) {
          if (j == node) continue;
          if (old < newpos && cand[j] > old && cand[j] <= newpos) cand[j]--;
          else if (old > newpos && cand[j] >= newpos && cand[j] < old) cand[j]++;
        }
        cand[node] = newpos;
        double s = scorer.total(cand);
        if (s < best - 1e-9) {
          best = s;
          pos = std::move(cand);
          improved = true;
        }
      }
    }
  }
  return pos;
}

// Strongly connected component ids of a binary adjacency matrix (Kosaraju
// with explicit stacks). An edge whose endpoints share a component lies on
// a directed cycle.
std::vector<int> scc_components(const Matrix& g) {
  const int d = g.rows;
  std::vector<int> order;
  std::vector<char> seen(d, 0);
  for (int s = 0; s < d; ++s) {
    if (seen[s]) continue;
    std::vector<std::pair<int, int>> stack{{s, 0}};
    seen[s] = 1;
    while (!stack.empty()) {
      int u = stack.back().first;
      bool advanced = false;
      for (int v = stack.back().second; v < d; ++v)
        if (g(u, v) != 0.0 && !seen[v]) {
          stack.back().second = v + 1;
          seen[v] = 1;
          stack.push_back({v, 0});
          advanced = true;
          break;
        }
      if (!advanced) {
        order.push_back(u);
        stack.pop_back();
      }
    }
  }
  std::vector<int> comp(d, -1);
  int c = 0;
  for (int i = d - 1; i >= 0; --i) {
    int s = order[i];
    if (comp[s] != -1) continue;
    std::vector<int> stack{s};
    comp[s] = c;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < d; ++v)
        if (g(v, u) != 0.0 && comp[v] == -1) {
          comp[v] = c;
          stack.push_back(v);
        }
    }
    ++c;
  }
  return comp;
}

}  // namespace

FitResult fit(const TimeSeriesDataset& data, const TrainConfig& cfg) {
  auto t_start = std::chrono::steady_clock::now();
  const int n = data.x.rows;
  const int d = data.x.cols;
  const int p = data.lag;
  if (n < cfg.batch_size) throw DimensionError("fit: fewer samples than one batch");

  Matrix x = data.x;
  Matrix y = data.y;
  center_columns(x);
  center_columns(y);
  std::vector<double> x_scale = standardize_columns(x);
  std::vector<double> y_scale = standardize_columns(y);
  std::vector<Matrix> y_blocks_full = split_lag_blocks(y, p, d);

  Rng rng(cfg.seed);
  const int k = cfg.embed_dim.value_or(default_embed_dim(d));

  ParamLayout layout;
  layout.lag = p;
  layout.low_rank = cfg.ablation != Ablation::kNoDgpl;
  layout.masked = cfg.ablation != Ablation::kNoAcml;

  LossConfig loss_cfg = cfg.loss;
  loss_cfg.kind = cfg.ablation == Ablation::kNoQmle ? LossKind::kLse : LossKind::kQmle;
  loss_cfg.use_mask = layout.masked;
  if (!layout.masked) loss_cfg.lambda1 = cfg.lambda1_base;

  std::vector<Matrix> params;
  if (layout.low_rank) {
    EmbeddingDictionaries e = init_embeddings(d, k, p, rng);
    for (auto& s : e.e_so) params.push_back(std::move(s));
    for (auto& s : e.e_to) params.push_back(std::move(s));
  } else {
    std::normal_distribution<double> gauss(0.0, 0.1);
    params.emplace_back(d, d);
    for (double& v : params.back().data) v = gauss(rng);
    for (int l = 0; l < p; ++l) {
      params.emplace_back(d, d);
      for (double& v : params.back().data) v = gauss(rng);
    }
  }
  if (layout.masked) {
    layout.priority_index = static_cast<int>(params.size());
    params.push_back(Matrix::constant(1, d, 1.0));
  }

  AdamState adam;
  adam.lr = cfg.lr;
  if (layout.masked && cfg.priority_lr_scale != 1.0) {
    adam.lr_scale.assign(params.size(), 1.0);
    adam.lr_scale[layout.priority_index] = cfg.priority_lr_scale;
  }
  adam.init(params);

  FitResult result;
  result.loss_history.reserve(cfg.epochs);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  const double tau0 = cfg.mask.tau;
  const double tau_final = std::min(tau0, 0.3);
  const int anneal_start = cfg.epochs - cfg.epochs / 3;

  std::vector<Matrix> last_good = params;
  bool stop = false;

  for (int epoch = 0; epoch < cfg.epochs && !stop; ++epoch) {
    double tau = tau0;
    if (cfg.epochs > 1 && epoch >= anneal_start)
      tau = tau0 + (tau_final - tau0) * (epoch - anneal_start + 1.0) /
                       (cfg.epochs - anneal_start);
    if (!layout.masked) {
      double esc = std::pow(10.0, epoch / cfg.lambda1_escalate_every);
      loss_cfg.lambda1 = std::min(cfg.lambda1_base * esc, cfg.lambda1_cap);
    }

    std::shuffle(order.begin(), order.end(), rng);
    LossValue epoch_sum;
    int batches = 0;
    last_good = params;

    for (int begin = 0; begin + cfg.batch_size <= n && !stop; begin += cfg.batch_size) {
      int end = begin + cfg.batch_size;
      Matrix xb = gather_rows(x, order, begin, end);
      std::vector<Matrix> yb;
      yb.reserve(p);
      for (const auto& blk : y_blocks_full) yb.push_back(gather_rows(blk, order, begin, end));

      for (int attempt = 0; attempt < 2; ++attempt) {
        Tape tape;
        std::vector<Var> leaves;
        leaves.reserve(params.size());
        for (const auto& m : params) leaves.push_back(tape.leaf(m));

        Var w_raw{-1};
        std::vector<Var> a_blocks;
        if (layout.low_rank) {
          w_raw = tape.matmul(leaves[0], tape.transpose(leaves[p + 1]));
          for (int l = 1; l <= p; ++l)
            a_blocks.push_back(tape.matmul(leaves[l], tape.transpose(leaves[p + 1 + l])));
        } else {
          w_raw = leaves[0];
          for (int l = 1; l <= p; ++l) a_blocks.push_back(leaves[l]);
        }
        Var w_eff = w_raw;
        if (layout.masked) {
          MaskConfig mcfg = cfg.mask;
          mcfg.tau = tau;
          mcfg.mode = MaskMode::kStochastic;
          Var mask = orientation_on_tape(tape, leaves[layout.priority_index], mcfg, rng);
          w_eff = tape.hadamard(w_raw, mask);
        }

        try {
          LossVars lv = build_loss(tape, xb, yb, w_eff, a_blocks, loss_cfg);
          LossValue val = loss_values(tape, lv);
          if (!std::isfinite(val.total)) {
            params = last_good;
            result.aborted = true;
            result.note = "non-finite loss at epoch " + std::to_string(epoch) +
                          "; restored last good parameters";
            stop = true;
            break;
          }
          auto adj = tape.backward(lv.total);
          std::vector<Matrix> grads;
          grads.reserve(params.size());
          for (Var leaf : leaves) grads.push_back(std::move(adj[leaf.node]));
          adam.step(params, grads);
          if (cfg.weight_decay > 0.0) {
            const double shrink = 1.0 - cfg.lr * cfg.weight_decay;
            // Only the instantaneous block needs the pull toward zero; the
            // lagged blocks do not feed S and decaying them just biases true
            // lag weights below the threshold.
            std::vector<int> decayed;
            if (layout.low_rank) {
              decayed = {0, p + 1};
            } else {
              decayed = {0};
            }
            for (int pi : decayed)
              for (double& v : params[pi].data) v *= shrink;
          }
          if (cfg.column_norm_cap > 0.0) {
            // Column i of the raw W is E_so times row i of E_to (direct
            // layout: the column itself), so capping scales that row.
            if (layout.low_rank) {
              Matrix w_now = matmul(params[0], transpose(params[p + 1]));
              for (int i = 0; i < d; ++i) {
                double norm_sq = 0.0;
                for (int j = 0; j < d; ++j) norm_sq += w_now(j, i) * w_now(j, i);
                double norm = std::sqrt(norm_sq);
                if (norm > cfg.column_norm_cap) {
                  double f = cfg.column_norm_cap / norm;
                  for (int c = 0; c < params[p + 1].cols; ++c) params[p + 1](i, c) *= f;
                }
              }
            } else {
              for (int i = 0; i < d; ++i) {
                double norm_sq = 0.0;
                for (int j = 0; j < d; ++j) norm_sq += params[0](j, i) * params[0](j, i);
                double norm = std::sqrt(norm_sq);
                if (norm > cfg.column_norm_cap) {
                  double f = cfg.column_norm_cap / norm;
                  for (int j = 0; j < d; ++j) params[0](j, i) *= f;
                }
              }
            }
          }
          epoch_sum.total += val.total;
          epoch_sum.data_term += val.data_term;
          epoch_sum.logdet_term += val.logdet_term;
          epoch_sum.sparsity_term += val.sparsity_term;
          epoch_sum.acyclicity_term += val.acyclicity_term;
          ++batches;
          break;
        } catch (const SingularError&) {
          if (attempt == 1) {
            result.aborted = true;
            result.note = "singular S twice in epoch " + std::to_string(epoch);
            stop = true;
          }
          // otherwise retry once with fresh mask noise
        } catch (const NumericError& e) {
          params = last_good;
          result.aborted = true;
          result.note = std::string("numerical failure: ") + e.what();
          stop = true;
        }
      }
    }
    if (batches > 0) {
      double inv = 1.0 / batches;
      result.loss_history.push_back({epoch_sum.total * inv, epoch_sum.data_term * inv,
                                     epoch_sum.logdet_term * inv, epoch_sum.sparsity_term * inv,
                                     epoch_sum.acyclicity_term * inv});
    }
  }

  // Refinement: freeze the priorities, fix the deterministic hard mask, and
  // retrain the weights without decay so magnitudes are unbiased.
  if (!stop && layout.masked && cfg.refine_epochs > 0) {
    // Polish the ordering: per-node regression BIC repairs the occasional
    // rank inversion left by the stochastic mask phase.
    std::vector<int> idx(d), pos(d);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      return params[layout.priority_index](0, a) < params[layout.priority_index](0, b);
    });
    for (int r = 0; r < d; ++r) pos[idx[r]] = r;
    try {
      OrderScorer scorer(x, y_blocks_full, cfg.threshold, x_scale, y_scale);
      pos = polish_order(scorer, pos);
    } catch (const SingularError&) {
      // degenerate regression; keep the learned ordering
    }
    for (int j = 0; j < d; ++j) params[layout.priority_index](0, j) = pos[j];

    PriorityVector pv(d);
    for (int j = 0; j < d; ++j) pv.p[j] = params[layout.priority_index](0, j);
    Matrix hard = hard_mask_from(pv, cfg.mask.omega);

    // The whole refinement stage runs in original units: the threshold and
    // the rank-k approximation error both live in that metric, and the
    // gated generator keeps these scales tame enough for optimization.
    Matrix x_orig = x;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) x_orig(i, j) *= x_scale[j];
    std::vector<Matrix> y_orig = y_blocks_full;
    for (int l = 0; l < p; ++l)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) y_orig[l](i, j) *= y_scale[l * d + j];

    // Converts the structural parameters between standardized and original
    // units; the diagonal scale transforms act on factor rows.
    auto scale_structural_params = [&](bool to_original) {
      auto row_scale = [&](Matrix& m, int i, double f) {
        for (int c = 0; c < m.cols; ++c) m(i, c) *= f;
      };
      if (layout.low_rank) {
        for (int i = 0; i < d; ++i) {
          row_scale(params[0], i, to_original ? 1.0 / x_scale[i] : x_scale[i]);
          row_scale(params[p + 1], i, to_original ? x_scale[i] : 1.0 / x_scale[i]);
          for (int l = 1; l <= p; ++l) {
            double se = y_scale[(l - 1) * d + i];
            row_scale(params[l], i, to_original ? 1.0 / se : se);
            row_scale(params[p + 1 + l], i, to_original ? x_scale[i] : 1.0 / x_scale[i]);
          }
        }
      } else {
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            double f = x_scale[j] / x_scale[i];
            params[0](i, j) *= to_original ? f : 1.0 / f;
            for (int l = 1; l <= p; ++l) {
              double fl = x_scale[j] / y_scale[(l - 1) * d + i];
              params[l](i, j) *= to_original ? fl : 1.0 / fl;
            }
          }
      }
    };
    scale_structural_params(/*to_original=*/true);

    // Re-seats the lag factors of every lag block by alternating least
    // squares against the residual left by the hard-masked instantaneous
    // part. The soft phase leaves them far from the best rank-k fit and
    // gradient steps alone do not recover it.
    auto als_lag_factors = [&]() {
      Matrix w_hard = hadamard(matmul(params[0], transpose(params[p + 1])), hard);
      Matrix base = matmul(x_orig, sub(Matrix::identity(d), w_hard));
      for (int l = 1; l <= p; ++l) {
        Matrix target = base;
        for (int o = 1; o <= p; ++o) {
          if (o == l) continue;
          target = sub(target, matmul(y_orig[o - 1],
                                      matmul(params[o], transpose(params[p + 1 + o]))));
        }
        const Matrix& yl = y_orig[l - 1];
        Matrix yty = matmul(transpose(yl), yl);
        double yridge = 1e-8;
        for (int c = 0; c < d; ++c) yridge = std::max(yridge, 1e-8 * yty(c, c));
        for (int c = 0; c < d; ++c) yty(c, c) += yridge;
        Matrix e = params[l], f = params[p + 1 + l];
        const int kk = e.cols;
        try {
          for (int sweep = 0; sweep < 15; ++sweep) {
            Matrix ytrf = matmul(transpose(yl), matmul(target, f));
            Matrix ftf = matmul(transpose(f), f);
            double ridge = 1e-10;
            for (int c = 0; c < kk; ++c) ridge = std::max(ridge, 1e-8 * ftf(c, c));
            for (int c = 0; c < kk; ++c) ftf(c, c) += ridge;
            e = transpose(solve(ftf, transpose(solve(yty, ytrf))));
            Matrix g = matmul(yl, e);
            Matrix gtg = matmul(transpose(g), g);
            ridge = 1e-10;
            for (int c = 0; c < kk; ++c) ridge = std::max(ridge, 1e-8 * gtg(c, c));
            for (int c = 0; c < kk; ++c) gtg(c, c) += ridge;
            f = transpose(solve(gtg, transpose(matmul(transpose(target), g))));
          }
        } catch (const SingularError&) {
          continue;  // keep the gradient-trained factors for this block
        }
        if (all_finite(e) && all_finite(f)) {
          params[l] = std::move(e);
          params[p + 1 + l] = std::move(f);
        }
      }
    };
    AdamState refine_adam;
    refine_adam.lr = cfg.lr;
    refine_adam.init(params);

    // With the graph fixed to a DAG and homoscedastic noise, least squares
    // is the maximum-likelihood magnitude estimate; the scaled data term is
    // only needed while the mask is relaxed.
    LossConfig refine_cfg = loss_cfg;
    refine_cfg.kind = LossKind::kLse;
    // Support selection is over (mask plus threshold); keeping the sparsity
    // pull here only biases borderline magnitudes below the threshold.
    refine_cfg.lambda2 = 0.0;

    for (int epoch = 0; epoch < cfg.refine_epochs && !stop; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      last_good = params;
      for (int begin = 0; begin + cfg.batch_size <= n && !stop; begin += cfg.batch_size) {
        int end = begin + cfg.batch_size;
        Matrix xb = gather_rows(x_orig, order, begin, end);
        std::vector<Matrix> yb;
        yb.reserve(p);
        for (const auto& blk : y_orig) yb.push_back(gather_rows(blk, order, begin, end));

        Tape tape;
        std::vector<Var> leaves;
        leaves.reserve(params.size());
        for (const auto& m : params) leaves.push_back(tape.leaf(m));

        Var w_raw{-1};
        std::vector<Var> a_blocks;
        if (layout.low_rank) {
          w_raw = tape.matmul(leaves[0], tape.transpose(leaves[p + 1]));
          for (int l = 1; l <= p; ++l)
            a_blocks.push_back(tape.matmul(leaves[l], tape.transpose(leaves[p + 1 + l])));
        } else {
          w_raw = leaves[0];
          for (int l = 1; l <= p; ++l) a_blocks.push_back(leaves[l]);
        }
        Var w_eff = tape.hadamard(w_raw, tape.leaf(hard));

        try {
          LossVars lv = build_loss(tape, xb, yb, w_eff, a_blocks, refine_cfg);
          LossValue val = loss_values(tape, lv);
          if (!std::isfinite(val.total)) {
            params = last_good;
            result.aborted = true;
            result.note = "non-finite loss in refinement epoch " + std::to_string(epoch);
            stop = true;
            break;
          }
          auto adj = tape.backward(lv.total);
          std::vector<Matrix> grads;
          grads.reserve(params.size());
          for (Var leaf : leaves) grads.push_back(std::move(adj[leaf.node]));
          refine_adam.step(params, grads);
        } catch (const SingularError&) {
          params = last_good;
          result.aborted = true;
          result.note = "singular S in refinement epoch " + std::to_string(epoch);
          stop = true;
        } catch (const NumericError& e) {
          params = last_good;
          result.aborted = true;
          result.note = std::string("numerical failure: ") + e.what();
          stop = true;
        }
      }
    }
    if (!stop && layout.low_rank && p > 0) als_lag_factors();
    scale_structural_params(/*to_original=*/false);
  }

  // Finalization: deterministic hard mask, then magnitude threshold.
  Matrix w_raw_final, a_final_stack;
  std::vector<Matrix> a_final;
  if (layout.low_rank) {
    w_raw_final = matmul(params[0], transpose(params[p + 1]));
    for (int l = 1; l <= p; ++l)
      a_final.push_back(matmul(params[l], transpose(params[p + 1 + l])));
  } else {
    w_raw_final = params[0];
    for (int l = 1; l <= p; ++l) a_final.push_back(params[l]);
  }

  // Back to the original units: the standardized model's coefficients map
  // exactly through the column scales.
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) w_raw_final(i, j) *= x_scale[j] / x_scale[i];
  for (int l = 1; l <= p; ++l)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        a_final[l - 1](i, j) *= x_scale[j] / y_scale[(l - 1) * d + i];

  result.p_final = PriorityVector(d);
  if (layout.masked) {
    for (int j = 0; j < d; ++j) result.p_final.p[j] = params[layout.priority_index](0, j);
    Matrix hard = hard_mask_from(result.p_final, cfg.mask.omega);
    result.w_weighted = hadamard(w_raw_final, hard);
  } else {
    result.w_weighted = w_raw_final;
    for (int i = 0; i < d; ++i) result.w_weighted(i, i) = 0.0;
  }
  result.w_binary = threshold_graph(result.w_weighted, cfg.threshold);
  if (!layout.masked) {
    // The penalty drives h(W) toward zero but cannot certify a DAG; drop
    // the weakest edge on a remaining cycle until none are left.
    for (;;) {
      std::vector<int> comp = scc_components(result.w_binary);
      int bi = -1, bj = -1;
      double weakest = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          if (result.w_binary(i, j) != 0.0 && comp[i] == comp[j]) {
            double mag = std::fabs(result.w_weighted(i, j));
            if (bi < 0 || mag < weakest) {
              weakest = mag;
              bi = i;
              bj = j;
            }
          }
      if (bi < 0) break;
      result.w_weighted(bi, bj) = 0.0;
      result.w_binary(bi, bj) = 0.0;
    }
  }
  for (auto& a : a_final) {
    result.a_binary.push_back(threshold_graph(a, cfg.threshold, /*zero_diagonal=*/false));
    result.a_weighted.push_back(std::move(a));
  }

  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

}  // namespace local
