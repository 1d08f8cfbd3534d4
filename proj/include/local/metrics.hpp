#pragma once

#include "local/matrix.hpp"

namespace local {

struct Confusion {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;
};

struct EdgeScores {
  double tpr = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

// `exclude_diagonal` drops the (i,i) entries of square graphs; instantaneous
// graphs never carry self-loops, while lag blocks may (self-lag edges).

Confusion confusion(const Matrix& est, const Matrix& truth, bool exclude_diagonal = true);

/// 0/0 convention: empty ratios are 0.
EdgeScores tpr_f1(const Confusion& c);

/// Edit distance; a reversed edge within a square graph counts once.
long shd(const Matrix& est, const Matrix& truth, bool exclude_diagonal = true);

/// Mann-Whitney rank AUROC with half credit for ties.
double auroc(const Matrix& scores, const Matrix& truth, bool exclude_diagonal = true);

/// Precision-recall curve area over all distinct score thresholds.
double auprc(const Matrix& scores, const Matrix& truth, bool exclude_diagonal = true);

}  // namespace local
