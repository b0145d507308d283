#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "forgerecon/errors.hpp"
#include "forgerecon/metrics.hpp"
#include "support/oracles.hpp"

using namespace forgerecon;
using namespace forgerecon::testing;

namespace {

struct Instance {
  std::vector<double> scores;
  std::vector<int> labels;
};

// Both classes present. Every third instance draws scores from a coarse grid
// so ties are frequent.
Instance random_instance(std::mt19937_64& rng, int n, bool coarse) {
  Instance in;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  do {
    in.scores.clear();
    in.labels.clear();
    for (int i = 0; i < n; ++i) {
      const double s = u(rng);
      in.scores.push_back(coarse ? std::round(s * 8.0) / 8.0 : s);
      in.labels.push_back(static_cast<int>(rng() % 2));
    }
  } while (std::count(in.labels.begin(), in.labels.end(), 1) % n == 0);
  return in;
}

std::vector<int> flipped(const std::vector<int>& labels) {
  std::vector<int> out;
  for (int l : labels) out.push_back(1 - l);
  return out;
}

}  // namespace

TEST(Auc, MatchesPairOracleOn200Instances) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const Instance in = random_instance(rng, 50, t % 3 == 0);
    EXPECT_NEAR(auc(in.scores, in.labels), auc_by_pairs(in.scores, in.labels), 1e-12) << "instance " << t;
  }
}

TEST(Eer, MatchesSweepOracleOn200Instances) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const Instance in = random_instance(rng, 50, t % 3 == 0);
    const EerResult got = eer(in.scores, in.labels);
    const EerOracle want = eer_by_sweep(in.scores, in.labels);
    EXPECT_NEAR(got.eer, want.eer, 1e-12) << "instance " << t;
    EXPECT_EQ(got.threshold, want.threshold) << "instance " << t;
  }
}

TEST(Auc, Examples) {
  const std::vector<int> labels{0, 1, 1, 0, 1};
  std::vector<double> as_scores(labels.begin(), labels.end());
  EXPECT_EQ(auc(as_scores, labels), 1.0);
  std::vector<double> inverted;
  for (int l : labels) inverted.push_back(1.0 - l);
  EXPECT_EQ(auc(inverted, labels), 0.0);
  EXPECT_EQ(auc(std::vector<double>(5, 0.3), labels), 0.5);
}

TEST(Auc, InvariantUnderMonotoneTransformAndComplement) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const Instance in = random_instance(rng, 40, t % 2 == 0);
    const double a = auc(in.scores, in.labels);
    std::vector<double> warped;
    for (double s : in.scores) warped.push_back(std::exp(3.0 * s) - 7.0);
    EXPECT_NEAR(auc(warped, in.labels), a, 1e-12);
    EXPECT_NEAR(a + auc(in.scores, flipped(in.labels)), 1.0, 1e-12);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

TEST(Eer, Examples) {
  const std::vector<int> labels{0, 0, 1, 1};
  const EerResult separated = eer(std::vector<double>{0.1, 0.2, 0.8, 0.9}, labels);
  EXPECT_EQ(separated.eer, 0.0);
  EXPECT_EQ(separated.threshold, 0.8);
  // One threshold only: everything is called fake, FPR 1 and FNR 0.
  EXPECT_EQ(eer(std::vector<double>(4, 0.5), labels).eer, 0.5);
}

TEST(Eer, GapBoundedByClassResolution) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    const Instance in = random_instance(rng, 30, false);
    const EerOracle o = eer_by_sweep(in.scores, in.labels);
    const EerResult got = eer(in.scores, in.labels);
    const auto pos = std::count(in.labels.begin(), in.labels.end(), 1);
    const auto neg = static_cast<long>(in.labels.size()) - pos;
    EXPECT_LE(std::abs(o.fpr - o.fnr), 1.0 / static_cast<double>(std::min(pos, neg)) + 1e-12);
    EXPECT_GE(got.eer, 0.0);
    EXPECT_LE(got.eer, 1.0);
  }
}

TEST(MetricsReport, ComposesComponents) {
  std::mt19937_64 rng(5);
  const Instance in = random_instance(rng, 60, false);
  const MetricsReport r = metrics_report(in.scores, in.labels);
  EXPECT_EQ(r.auc, auc(in.scores, in.labels));
  EXPECT_EQ(r.eer, eer(in.scores, in.labels).eer);
  EXPECT_EQ(r.eer_threshold, eer(in.scores, in.labels).threshold);
  EXPECT_EQ(r.acc, accuracy(in.scores, in.labels));
  EXPECT_EQ(r.count(), in.scores.size());
  EXPECT_EQ(static_cast<long>(r.n_pos), std::count(in.labels.begin(), in.labels.end(), 1));
  const std::string row = r.csv_row();
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 5);
  EXPECT_NE(r.table().find("AUC"), std::string::npos);
}

TEST(MetricsReport, AccuracyExamples) {
  const std::vector<int> labels{0, 1, 1, 0, 1, 0, 0};
  std::vector<double> exact;
  for (int l : labels) exact.push_back(l ? 0.9 : 0.1);
  EXPECT_EQ(metrics_report(exact, labels).acc, 1.0);
  // A constant score predicts one class for everyone, so accuracy is that class's share.
  EXPECT_DOUBLE_EQ(accuracy(std::vector<double>(7, 0.2), labels), 4.0 / 7.0);
  EXPECT_DOUBLE_EQ(accuracy(std::vector<double>(7, 0.7), labels), 3.0 / 7.0);
  EXPECT_DOUBLE_EQ(accuracy(exact, labels, 0.95), 4.0 / 7.0);
}

TEST(Metrics, Errors) {
  const std::vector<double> s{0.1, 0.2, 0.3};
  EXPECT_THROW(auc(s, std::vector<int>{1, 1, 1}), UndefinedMetricError);
  EXPECT_THROW(eer(s, std::vector<int>{0, 0, 0}), UndefinedMetricError);
  EXPECT_THROW(auc(s, std::vector<int>{0, 1}), ShapeError);
  EXPECT_THROW(auc(std::vector<double>{}, std::vector<int>{}), EmptyInputError);
  EXPECT_THROW(accuracy(s, std::vector<int>{0, 2, 1}), ConfigError);
  EXPECT_THROW(metrics_report(s, std::vector<int>{1, 1, 1}), UndefinedMetricError);
}
