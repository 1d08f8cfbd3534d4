#include "local/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace local {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw DimensionError("metrics: graph shape mismatch");
}

bool skip_entry(const Matrix& m, int i, int j, bool exclude_diagonal) {
  return exclude_diagonal && m.rows == m.cols && i == j;
}

}  // namespace

Confusion confusion(const Matrix& est, const Matrix& truth, bool exclude_diagonal) {
  require_same_shape(est, truth);
  Confusion c;
  for (int i = 0; i < est.rows; ++i)
    for (int j = 0; j < est.cols; ++j) {
      if (skip_entry(est, i, j, exclude_diagonal)) continue;
      bool e = est(i, j) != 0.0;
      bool t = truth(i, j) != 0.0;
      if (e && t)
        ++c.tp;
      else if (e && !t)
        ++c.fp;
      else if (!e && t)
        ++c.fn;
      else
        ++c.tn;
    }
  return c;
}

EdgeScores tpr_f1(const Confusion& c) {
  EdgeScores s;
  s.tpr = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
  s.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
  s.f1 = s.precision + s.tpr > 0.0 ? 2.0 * s.precision * s.tpr / (s.precision + s.tpr) : 0.0;
  return s;
}

long shd(const Matrix& est, const Matrix& truth, bool exclude_diagonal) {
  require_same_shape(est, truth);
  long dist = 0;
  if (est.rows == est.cols) {
    if (!exclude_diagonal)
      for (int i = 0; i < est.rows; ++i)
        dist += (est(i, i) != 0.0) != (truth(i, i) != 0.0);
    for (int i = 0; i < est.rows; ++i)
      for (int j = i + 1; j < est.cols; ++j) {
        bool e_ij = est(i, j) != 0.0, e_ji = est(j, i) != 0.0;
        bool t_ij = truth(i, j) != 0.0, t_ji = truth(j, i) != 0.0;
        if (e_ij == t_ij && e_ji == t_ji) continue;
        // a pure reversal counts once
        if ((e_ij != e_ji) && (t_ij != t_ji))
          dist += 1;
        else
          dist += (e_ij != t_ij) + (e_ji != t_ji);
      }
  } else {
    for (size_t i = 0; i < est.data.size(); ++i)
      dist += (est.data[i] != 0.0) != (truth.data[i] != 0.0);
  }
  return dist;
}

namespace {

struct RankedPairs {
  std::vector<double> scores;
  std::vector<char> labels;
  long positives = 0;
  long negatives = 0;
};

RankedPairs collect(const Matrix& scores, const Matrix& truth, bool exclude_diagonal) {
  require_same_shape(scores, truth);
  RankedPairs rp;
  for (int i = 0; i < scores.rows; ++i)
    for (int j = 0; j < scores.cols; ++j) {
      if (skip_entry(scores, i, j, exclude_diagonal)) continue;
      rp.scores.push_back(scores(i, j));
      char pos = truth(i, j) != 0.0;
      rp.labels.push_back(pos);
      (pos ? rp.positives : rp.negatives)++;
    }
  if (rp.positives == 0 || rp.negatives == 0)
    throw std::invalid_argument("metrics: truth must contain a positive and a negative pair");
  return rp;
}

}  // namespace

double auroc(const Matrix& scores, const Matrix& truth, bool exclude_diagonal) {
  RankedPairs rp = collect(scores, truth, exclude_diagonal);
  // Mann-Whitney: P(score_pos > score_neg) + 0.5 P(tie), via tie-adjusted ranks.
  const size_t n = rp.scores.size();
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](size_t a, size_t b) { return rp.scores[a] < rp.scores[b]; });
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && rp.scores[idx[j]] == rp.scores[idx[i]]) ++j;
    double avg_rank = (i + 1 + j) / 2.0;  // 1-based average rank of the tie group
    for (size_t k = i; k < j; ++k)
      if (rp.labels[idx[k]]) rank_sum_pos += avg_rank;
    i = j;
  }
  double u = rank_sum_pos - rp.positives * (rp.positives + 1.0) / 2.0;
  return u / (static_cast<double>(rp.positives) * rp.negatives);
}

double auprc(const Matrix& scores, const Matrix& truth, bool exclude_diagonal) {
  RankedPairs rp = collect(scores, truth, exclude_diagonal);
  const size_t n = rp.scores.size();
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](size_t a, size_t b) { return rp.scores[a] > rp.scores[b]; });
  double area = 0.0;
  double prev_recall = 0.0, prev_precision = 1.0;
  long tp = 0, fp = 0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && rp.scores[idx[j]] == rp.scores[idx[i]]) ++j;
    for (size_t k = i; k < j; ++k) (rp.labels[idx[k]] ? tp : fp)++;
    double recall = static_cast<double>(tp) / rp.positives;
    double precision = static_cast<double>(tp) / (tp + fp);
    area += 0.5 * (precision + prev_precision) * (recall - prev_recall);
    prev_recall = recall;
    prev_precision = precision;
    i = j;
  }
  return area;
}

}  // namespace local
