#pragma once

#include <optional>
#include <string>
#include <vector>

#include "local/acml.hpp"
#include "local/dgpl.hpp"
#include "local/objective.hpp"

namespace local {

/// Aligned sample rows: X holds X_t, Y holds [X_{t-1} | ... | X_{t-p}].
struct TimeSeriesDataset {
  Matrix x;
  Matrix y;
  int lag = 0;
};

/// Build the pooled sample matrix from one or more series; rows never cross
/// a series boundary.
TimeSeriesDataset make_samples(const std::vector<Matrix>& series, int lag);

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr = 1e-2;
  // Optional per-parameter multiplier on lr; empty means 1.0 for all.
  std::vector<double> lr_scale;

  void init(const std::vector<Matrix>& params);
  /// One Adam update in place; throws NumericError on non-finite gradients.
  void step(std::vector<Matrix>& params, const std::vector<Matrix>& grads);
};

enum class Ablation { kNone, kNoDgpl, kNoAcml, kNoQmle };

Ablation ablation_from_string(const std::string& s);
std::string to_string(Ablation a);

struct TrainConfig {
  int epochs = 2000;
  int batch_size = 16;
  double lr = 1e-2;
  unsigned long long seed = 0;
  double threshold = 0.3;
  LossConfig loss;
  MaskConfig mask;
  std::optional<int> embed_dim;  // defaults to round(2d/5)
  Ablation ablation = Ablation::kNone;
  // Decoupled decay on the structural parameters (not the priority vector).
  // The relaxed mask makes the scaled QMLE score drift toward inflated
  // weights early in training; a small pull toward zero removes that drift
  // without touching the score itself.
  double weight_decay = 0.2;
  // Projection cap on the column norms of the raw instantaneous matrix
  // during the relaxed phase; the scaled data term otherwise pays off
  // unbounded column inflation. 0 disables the cap.
  double column_norm_cap = 3.0;
  // Larger steps for the priority vector; it sits behind a saturating
  // logistic and otherwise lags the structural weights.
  double priority_lr_scale = 1.0;
  // After the main loop the priorities freeze, the mask hardens, decay
  // switches off, and only the weights retrain; this removes the magnitude
  // bias the decay leaves behind.
  int refine_epochs = 200;
  // no-mask ablation only: lambda1 escalates x10 every this many epochs
  double lambda1_base = 1.0;
  int lambda1_escalate_every = 500;
  double lambda1_cap = 1e4;
};

struct FitResult {
  Matrix w_weighted;               // hard-masked weighted estimate
  Matrix w_binary;
  std::vector<Matrix> a_weighted;  // one d x d block per lag
  std::vector<Matrix> a_binary;
  PriorityVector p_final{0};
  std::vector<LossValue> loss_history;  // epoch means
  double wall_time_seconds = 0.0;
  bool aborted = false;
  std::string note;
};

/// |w| > thr as 0/1; instantaneous graphs drop the diagonal, lag blocks
/// keep it (self-lag edges are legitimate).
Matrix threshold_graph(const Matrix& w, double thr, bool zero_diagonal = true);

FitResult fit(const TimeSeriesDataset& data, const TrainConfig& cfg);

}  // namespace local
