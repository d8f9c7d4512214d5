#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>

#include "eegnet/metrics.hpp"
#include "eegnet/rng.hpp"

using namespace eegnet;

namespace {

// Straight from the definitions: per class, count tp/fp/fn by scanning pairs.
double brute_force_weighted_f1(const std::vector<int>& y, const std::vector<int>& p, int classes) {
  double acc = 0.0;
  for (int c = 0; c < classes; ++c) {
    long double tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == c) ++support;
      if (y[i] == c && p[i] == c) ++tp;
      if (y[i] != c && p[i] == c) ++fp;
      if (y[i] == c && p[i] != c) ++fn;
    }
    const long double prec = tp + fp > 0 ? tp / (tp + fp) : 0;
    const long double rec = tp + fn > 0 ? tp / (tp + fn) : 0;
    const long double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0;
    acc += static_cast<double>(f1 * support);
  }
  return acc / static_cast<double>(y.size());
}

double wf1(const std::vector<int>& y, const std::vector<int>& p) { return weighted_f1(confusion(y, p)); }

}  // namespace

TEST(WeightedF1, HandDerivedCase) {
  EXPECT_DOUBLE_EQ(wf1({0, 0, 1, 1, 1, 2}, {0, 1, 1, 1, 2, 2}), 2.0 / 3.0);
}

TEST(WeightedF1, PerfectPrediction) {
  EXPECT_EQ(wf1({0, 1, 2, 1}, {0, 1, 2, 1}), 1.0);
}

TEST(WeightedF1, ConstantPredictorOnBalancedData) {
  EXPECT_NEAR(wf1({0, 0, 1, 1, 2, 2}, {1, 1, 1, 1, 1, 1}), 1.0 / 6.0, 1e-12);
}

TEST(WeightedF1, MatchesBruteForce) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(200);
    std::vector<int> y(n), p(n);
    const bool skewed = trial % 3 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(3));
      p[i] = skewed && rng.uniform() < 0.7 ? y[i] : static_cast<int>(rng.below(3));
    }
    EXPECT_NEAR(wf1(y, p), brute_force_weighted_f1(y, p, 3), 1e-12);
  }
}

TEST(WeightedF1, InvariantUnderSamplePermutation) {
  Rng rng(3);
  std::vector<int> y(80), p(80);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = static_cast<int>(rng.below(3));
    p[i] = static_cast<int>(rng.below(3));
  }
  const double base = wf1(y, p);
  std::vector<std::size_t> idx(y.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (int k = 0; k < 20; ++k) {
    rng.shuffle(std::span(idx));
    std::vector<int> ys, ps;
    for (auto i : idx) {
      ys.push_back(y[i]);
      ps.push_back(p[i]);
    }
    EXPECT_NEAR(wf1(ys, ps), base, 1e-12);
  }
}

TEST(WeightedF1, InvariantUnderClassRelabeling) {
  Rng rng(4);
  std::vector<int> y(60), p(60);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = static_cast<int>(rng.below(3));
    p[i] = rng.uniform() < 0.5 ? y[i] : static_cast<int>(rng.below(3));
  }
  std::array<int, 3> perm{0, 1, 2};
  const double base = wf1(y, p);
  while (std::next_permutation(perm.begin(), perm.end())) {
    std::vector<int> ys, ps;
    for (std::size_t i = 0; i < y.size(); ++i) {
      ys.push_back(perm[y[i]]);
      ps.push_back(perm[p[i]]);
    }
    EXPECT_NEAR(wf1(ys, ps), base, 1e-12);
  }
}

TEST(WeightedF1, BoundedInUnitInterval) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> y(1 + rng.below(30)), p(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] = static_cast<int>(rng.below(3));
      p[i] = static_cast<int>(rng.below(3));
    }
    const double f = wf1(y, p);
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
  }
}

TEST(Confusion, CountsAndErrors) {
  const auto cm = confusion(std::vector<int>{0, 0, 2}, std::vector<int>{0, 1, 2});
  EXPECT_EQ(cm.at(0, 0), 1u);
  EXPECT_EQ(cm.at(0, 1), 1u);
  EXPECT_EQ(cm.at(2, 2), 1u);
  EXPECT_EQ(cm.total(), 3u);
  EXPECT_THROW(confusion(std::vector<int>{}, std::vector<int>{}), ConfigError);
  EXPECT_THROW(confusion(std::vector<int>{0, 1}, std::vector<int>{0}), ConfigError);
  EXPECT_THROW(confusion(std::vector<int>{0, 3}, std::vector<int>{0, 1}), ConfigError);
}

TEST(Report, UnpredictedClassScoresZero) {
  const auto report = evaluate_predictions(std::vector<int>{0, 1, 2}, std::vector<int>{0, 0, 0});
  EXPECT_EQ(report.per_class[1].precision, 0.0);
  EXPECT_EQ(report.per_class[1].f1, 0.0);
  EXPECT_EQ(report.per_class[2].support, 1u);
  EXPECT_NEAR(report.accuracy, 1.0 / 3.0, 1e-15);
}

TEST(Report, JsonRoundsToFourPlaces) {
  const auto report = evaluate_predictions(std::vector<int>{0, 0, 1, 1, 1, 2}, std::vector<int>{0, 1, 1, 1, 2, 2});
  const auto j = to_json(report);
  EXPECT_EQ(j.at("weighted_f1").get<double>(), 0.6667);
  EXPECT_TRUE(j.contains("confusion"));
}
