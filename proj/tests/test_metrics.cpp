#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "local/metrics.hpp"

using namespace local;

TEST_CASE("confusion counts") {
  Matrix truth(3, 3);
  truth(0, 1) = 1.0;
  truth(1, 2) = 1.0;

  Confusion same = confusion(truth, truth);
  CHECK(same.tp == 2);
  CHECK(same.fp == 0);
  CHECK(same.fn == 0);

  Confusion none = confusion(Matrix(3, 3), truth);
  CHECK(none.tp == 0);
  CHECK(none.fn == 2);

  // one reversal: est has 1->0 instead of 0->1
  Matrix est(3, 3);
  est(1, 0) = 1.0;
  est(1, 2) = 1.0;
  Confusion rev = confusion(est, truth);
  CHECK(rev.tp == 1);
  CHECK(rev.fp == 1);
  CHECK(rev.fn == 1);

  CHECK_THROWS_AS(confusion(Matrix(2, 2), truth), DimensionError);
}

TEST_CASE("tpr_f1") {
  EdgeScores perfect = tpr_f1({5, 0, 0, 10});
  CHECK(perfect.tpr == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.f1 == 1.0);

  EdgeScores zero = tpr_f1({0, 0, 3, 10});
  CHECK(zero.tpr == 0.0);
  CHECK(zero.precision == 0.0);
  CHECK(zero.f1 == 0.0);

  EdgeScores s = tpr_f1({2, 1, 2, 10});
  CHECK(s.tpr == doctest::Approx(0.5));
  CHECK(s.precision == doctest::Approx(2.0 / 3.0));
  CHECK(s.f1 == doctest::Approx(0.5714285714).epsilon(1e-6));
}

TEST_CASE("shd") {
  Matrix g(4, 4);
  g(0, 1) = 1.0;
  g(2, 3) = 1.0;
  CHECK(shd(g, g) == 0);

  Matrix rev = g;
  rev(0, 1) = 0.0;
  rev(1, 0) = 1.0;
  CHECK(shd(rev, g) == 1);

  // est adds one edge and misses another
  Matrix mixed(4, 4);
  mixed(0, 1) = 1.0;
  mixed(1, 3) = 1.0;
  CHECK(shd(mixed, g) == 2);

  // symmetry and upper bound
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a(5, 5), b(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        if (i == j) continue;
        a(i, j) = rng() % 3 == 0;
        b(i, j) = rng() % 3 == 0;
      }
    CHECK(shd(a, b) == shd(b, a));
    CHECK(shd(a, b) <= 20);
  }
}

TEST_CASE("auroc examples") {
  Matrix scores(1, 4, {0.9, 0.8, 0.4, 0.2});
  Matrix truth(1, 4, {1, 0, 1, 0});
  CHECK(auroc(scores, truth) == doctest::Approx(0.75));

  Matrix sep(1, 4, {0.9, 0.8, 0.2, 0.1});
  Matrix sep_truth(1, 4, {1, 1, 0, 0});
  CHECK(auroc(sep, sep_truth) == doctest::Approx(1.0));

  Matrix flat = Matrix::constant(1, 6, 0.5);
  Matrix flat_truth(1, 6, {1, 0, 1, 0, 0, 1});
  CHECK(auroc(flat, flat_truth) == doctest::Approx(0.5));

  CHECK_THROWS(auroc(sep, Matrix::constant(1, 4, 1.0)));
}

TEST_CASE("auroc rank method equals threshold sweep") {
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 40;
    Matrix scores(1, n), truth(1, n);
    for (int i = 0; i < n; ++i) {
      scores(0, i) = std::round(unif(rng) * 10.0) / 10.0;  // force ties
      truth(0, i) = unif(rng) < 0.4;
    }
    bool has_pos = false, has_neg = false;
    for (double t : truth.data) (t != 0.0 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) continue;

    // exhaustive threshold-sweep trapezoid oracle over ROC space
    std::vector<double> cuts(scores.data.begin(), scores.data.end());
    std::sort(cuts.begin(), cuts.end(), std::greater<>());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    long pos = 0, neg = 0;
    for (double t : truth.data) (t != 0.0 ? pos : neg)++;
    double area = 0.0, prev_fpr = 0.0, prev_tpr = 0.0;
    for (double cut : cuts) {
      long tp = 0, fp = 0;
      for (int i = 0; i < n; ++i)
        if (scores(0, i) >= cut) (truth(0, i) != 0.0 ? tp : fp)++;
      double tpr = static_cast<double>(tp) / pos;
      double fpr = static_cast<double>(fp) / neg;
      area += 0.5 * (tpr + prev_tpr) * (fpr - prev_fpr);
      prev_fpr = fpr;
      prev_tpr = tpr;
    }
    area += 0.5 * (1.0 + prev_tpr) * (1.0 - prev_fpr);
    CHECK(auroc(scores, truth) == doctest::Approx(area).epsilon(1e-12));
  }
}

TEST_CASE("auprc") {
  Matrix sep(1, 4, {0.9, 0.8, 0.2, 0.1});
  Matrix truth(1, 4, {1, 1, 0, 0});
  CHECK(auprc(sep, truth) == doctest::Approx(1.0));

  Matrix worst(1, 4, {0.9, 0.8, 0.2, 0.1});
  Matrix wtruth(1, 4, {0, 0, 1, 1});
  CHECK(auprc(worst, wtruth) < 0.5);
}

TEST_CASE("adding a correct edge never decreases TP") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix truth(5, 5), est(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j)
        if (i != j) {
          truth(i, j) = rng() % 2;
          est(i, j) = truth(i, j) != 0.0 && rng() % 2;
        }
    long tp_before = confusion(est, truth).tp;
    bool added = false;
    for (int i = 0; i < 5 && !added; ++i)
      for (int j = 0; j < 5 && !added; ++j)
        if (i != j && truth(i, j) != 0.0 && est(i, j) == 0.0) {
          est(i, j) = 1.0;
          added = true;
        }
    if (added) CHECK(confusion(est, truth).tp == tp_before + 1);
  }
}

TEST_CASE("lag blocks keep their diagonal when asked") {
  Matrix est(3, 3), truth(3, 3);
  est(0, 0) = 1.0;
  truth(0, 0) = 1.0;
  truth(1, 1) = 1.0;
  Confusion c = confusion(est, truth, /*exclude_diagonal=*/false);
  CHECK(c.tp == 1);
  CHECK(c.fn == 1);
  CHECK(shd(est, truth, false) == 1);
  CHECK(shd(est, truth, true) == 0);
}
