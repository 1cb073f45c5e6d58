#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "edgesched/metrics.hpp"
#include "edgesched/neural/model.hpp"

using namespace edgesched;

namespace {

using Row = std::array<double, kTypeCount>;

Row one_hot(int c) {
  Row r{};
  r[static_cast<std::size_t>(c)] = 1.0;
  return r;
}

PredictedSequence hard(std::vector<int> predicted, std::vector<int> targets) {
  PredictedSequence s;
  for (int p : predicted) s.rows.push_back(one_hot(p));
  s.targets = std::move(targets);
  return s;
}

Row random_row(std::mt19937_64& rng) {
  std::gamma_distribution<double> g(0.5, 1.0);
  Row r{};
  double total = 0.0;
  for (double& v : r) total += (v = g(rng) + 1e-12);
  for (double& v : r) v /= total;
  return r;
}

}  // namespace

TEST(SoftAccuracy, PartialOrderingExample) {
  const std::vector<PredictedSequence> batch{hard({1, 3, 2}, {1, 2, 3})};
  EXPECT_NEAR(soft_accuracy(batch), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(neural::soft_sequence_loss(batch[0].rows, batch[0].targets), 2.0 / 3.0, 1e-12);
}

TEST(SoftAccuracy, PerfectAndUniform) {
  const std::vector<PredictedSequence> perfect{hard({0, 4}, {0, 4}), hard({8}, {8})};
  EXPECT_EQ(soft_accuracy(perfect), 1.0);
  Row uniform{};
  uniform.fill(1.0 / 9.0);
  const std::vector<PredictedSequence> flat{{{uniform, uniform}, {3, 5}}};
  EXPECT_NEAR(soft_accuracy(flat), 1.0 / 9.0, 1e-15);
  EXPECT_THROW(soft_accuracy(std::vector<PredictedSequence>{}), ValidationError);
}

TEST(SoftPrecisionRecall, PerfectAndAlwaysWrong) {
  std::vector<PredictedSequence> perfect{hard({0, 1, 2, 3, 4, 5, 6, 7, 8}, {0, 1, 2, 3, 4, 5, 6, 7, 8})};
  auto [p, r] = soft_precision_recall(perfect);
  EXPECT_NEAR(p, 1.0, 1e-8);
  EXPECT_NEAR(r, 1.0, 1e-8);
  const SoftConfusion acc = soft_confusion(perfect);
  for (std::size_t c = 0; c < 9; ++c) EXPECT_NEAR(acc.tp[c] / (acc.tp[c] + acc.fp[c] + 1e-9), 1.0, 1e-8);

  std::vector<PredictedSequence> wrong{hard({1, 2, 0}, {0, 1, 2})};
  auto [pw, rw] = soft_precision_recall(wrong);
  EXPECT_EQ(pw, 0.0);
  EXPECT_EQ(rw, 0.0);
}

TEST(SoftPrecisionRecall, HandComputedTwoClassToy) {
  // Five tokens over classes 0 and 1.
  Row a{}, b{}, c{}, d{}, e{};
  a[0] = 0.9, a[1] = 0.1;  // target 0
  b[0] = 0.6, b[1] = 0.4;  // target 0
  c[0] = 0.3, c[1] = 0.7;  // target 1
  d[0] = 0.2, d[1] = 0.8;  // target 1
  e[0] = 0.5, e[1] = 0.5;  // target 0
  const std::vector<PredictedSequence> batch{{{a, b, c}, {0, 0, 1}}, {{d, e}, {1, 0}}};
  // class 0: TP = .9+.6+.5 = 2.0, FP = .3+.2 = 0.5, FN = .1+.4+.5 = 1.0
  // class 1: TP = .7+.8 = 1.5, FP = .1+.4+.5 = 1.0, FN = .3+.2 = 0.5
  const SoftConfusion acc = soft_confusion(batch);
  EXPECT_NEAR(acc.tp[0], 2.0, 1e-15);
  EXPECT_NEAR(acc.fp[0], 0.5, 1e-15);
  EXPECT_NEAR(acc.fn[0], 1.0, 1e-15);
  EXPECT_NEAR(acc.tp[1], 1.5, 1e-15);
  EXPECT_NEAR(acc.fp[1], 1.0, 1e-15);
  EXPECT_NEAR(acc.fn[1], 0.5, 1e-15);
  auto [p, r] = soft_precision_recall(batch);
  const double eps = 1e-9;
  EXPECT_NEAR(p, (2.0 / (2.5 + eps) + 1.5 / (2.5 + eps)) / 9.0, 1e-15);
  EXPECT_NEAR(r, (2.0 / (3.0 + eps) + 1.5 / (2.0 + eps)) / 9.0, 1e-15);
}

TEST(WeightedF1, ExtremesAndHandConfusion) {
  EXPECT_EQ(weighted_f1(std::vector<int>{0, 1, 1}, std::vector<int>{0, 1, 1}), 1.0);
  EXPECT_EQ(weighted_f1(std::vector<int>{1, 0, 0}, std::vector<int>{0, 1, 1}), 0.0);
  // targets: 0 x4, 1 x2. predictions: 0,0,0,1 | 1,0
  // class 0: tp 3 fp 1 fn 1 -> P = R = 0.75, F1 = 0.75
  // class 1: tp 1 fp 1 fn 1 -> P = R = 0.5,  F1 = 0.5
  // weighted: (4 * 0.75 + 2 * 0.5) / 6 = 4/6
  std::array<double, 9> per_class{};
  const double f1 =
      weighted_f1(std::vector<int>{0, 0, 0, 1, 1, 0}, std::vector<int>{0, 0, 0, 0, 1, 1}, &per_class);
  EXPECT_NEAR(f1, 4.0 / 6.0, 1e-15);
  EXPECT_NEAR(per_class[0], 0.75, 1e-15);
  EXPECT_NEAR(per_class[1], 0.5, 1e-15);
  EXPECT_THROW(weighted_f1(std::vector<int>{}, std::vector<int>{}), ValidationError);
}

TEST(MetricsProperties, IdentityWithLossAndBatchOrderInvariance) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PredictedSequence> batch(1 + rng() % 20);
    double loss_sum = 0.0;
    for (auto& seq : batch) {
      const std::size_t len = 1 + rng() % 10;
      for (std::size_t t = 0; t < len; ++t) {
        seq.rows.push_back(random_row(rng));
        seq.targets.push_back(static_cast<int>(rng() % 9));
      }
      loss_sum += neural::soft_sequence_loss(seq.rows, seq.targets);
    }
    const MetricsReport m = compute_metrics(batch);
    EXPECT_NEAR(m.avg_soft_accuracy, 1.0 - loss_sum / static_cast<double>(batch.size()), 1e-12);
    for (double v : {m.avg_soft_accuracy, m.avg_soft_precision, m.avg_soft_recall, m.weighted_f1}) {
      EXPECT_TRUE(v >= 0.0 && v <= 1.0);
    }
    std::shuffle(batch.begin(), batch.end(), rng);
    const MetricsReport shuffled = compute_metrics(batch);
    EXPECT_NEAR(shuffled.avg_soft_accuracy, m.avg_soft_accuracy, 1e-12);
    EXPECT_NEAR(shuffled.avg_soft_precision, m.avg_soft_precision, 1e-12);
    EXPECT_NEAR(shuffled.avg_soft_recall, m.avg_soft_recall, 1e-12);
    EXPECT_EQ(shuffled.weighted_f1, m.weighted_f1);
  }
}
