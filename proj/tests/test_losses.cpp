#include <gtest/gtest.h>

#include <cmath>

#include "forgerecon/errors.hpp"
#include "forgerecon/losses.hpp"
#include "forgerecon/ops.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace forgerecon;
using namespace forgerecon::testing;

namespace {

std::vector<double> random_vector(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

std::vector<int> random_labels(int n, std::mt19937_64& rng) {
  std::vector<int> l(n);
  for (int& x : l) x = static_cast<int>(rng() % 2);
  return l;
}

double mse_loop(const Tensor& x, const Tensor& r, const std::vector<int>& labels) {
  const std::size_t per = x.size() / labels.size();
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    if (labels[b] != 0) continue;
    for (std::size_t i = 0; i < per; ++i) s += (x[b * per + i] - r[b * per + i]) * (x[b * per + i] - r[b * per + i]);
    count += per;
  }
  return count ? s / static_cast<double>(count) : 0.0;
}

}  // namespace

TEST(CosineDistance, Examples) {
  const std::vector<double> a{1.0, -2.0, 0.5}, neg{-1.0, 2.0, -0.5};
  EXPECT_NEAR(cosine_distance(a, a), 0.0, 1e-15);
  EXPECT_NEAR(cosine_distance(a, neg), 1.0, 1e-15);
  EXPECT_NEAR(cosine_distance(std::vector<double>{1, 0}, std::vector<double>{0, 3}), 0.5, 1e-15);
}

TEST(CosineDistance, RangeSymmetryAndScaleInvariance) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> pos(0.01, 100.0);
  for (int t = 0; t < 500; ++t) {
    const auto a = random_vector(1 + t % 9, rng), b = random_vector(1 + t % 9, rng);
    const double d = cosine_distance(a, b);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    EXPECT_EQ(d, cosine_distance(b, a));
    std::vector<double> sa = a, sb = b;
    const double alpha = pos(rng), beta = pos(rng);
    for (double& x : sa) x *= alpha;
    for (double& x : sb) x *= beta;
    EXPECT_NEAR(cosine_distance(sa, sb), d, 1e-12);
  }
}

TEST(CosineDistance, Errors) {
  EXPECT_THROW(cosine_distance(std::vector<double>{0, 0}, std::vector<double>{1, 0}), DegenerateVectorError);
  EXPECT_THROW(cosine_distance(std::vector<double>{1, 0}, std::vector<double>{0, 0}), DegenerateVectorError);
  EXPECT_THROW(cosine_distance(std::vector<double>{1, 0}, std::vector<double>{1}), ShapeError);
}

TEST(MetricLoss, Examples) {
  const std::vector<int> two_real{0, 0};
  EXPECT_NEAR(metric_loss(Var(Tensor({2, 3}, {0.3, -1.0, 2.0, 0.3, -1.0, 2.0}), false), two_real).value()[0], 0.0,
              1e-15);
  const std::vector<int> real_fake{0, 1};
  EXPECT_NEAR(metric_loss(Var(Tensor({2, 3}, {0.3, -1.0, 2.0, -0.3, 1.0, -2.0}), false), real_fake).value()[0], -1.0,
              1e-15);
  // Only fakes: both pair classes are empty.
  const std::vector<int> fakes{1, 1, 1};
  std::mt19937_64 rng(2);
  EXPECT_EQ(metric_loss(Var(Tensor({3, 4}, random_vector(12, rng)), false), fakes).value()[0], 0.0);
}

TEST(MetricLoss, MatchesPairLoopOracleOn100Batches) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const int rows = 1 + static_cast<int>(rng() % 12), cols = 1 + static_cast<int>(rng() % 10);
    const auto f = random_vector(rows * cols, rng);
    const auto labels = random_labels(rows, rng);
    const double got = metric_loss(Var(Tensor({rows, cols}, f), false), labels).value()[0];
    EXPECT_NEAR(got, metric_loss_by_pairs(f, rows, cols, labels), 1e-12) << "batch " << t;
    EXPECT_GE(got, -1.0);
    EXPECT_LE(got, 1.0);
  }
}

TEST(MetricLoss, Gradient) {
  std::mt19937_64 rng(4);
  Var f = random_leaf({6, 5}, rng);
  const std::vector<int> labels{0, 1, 0, 0, 1, 1};
  GradCheckResult r = check_gradients([&] { return metric_loss(f, labels); }, {f});
  EXPECT_LT(r.rel_error, 1e-4);
  EXPECT_GT(r.analytic_norm, 0.0);
}

TEST(ReconstructionLoss, Examples) {
  std::mt19937_64 rng(5);
  const Tensor x = random_tensor({3, 3, 4, 4}, rng, 0.0, 1.0);
  const Tensor r = random_tensor({3, 3, 4, 4}, rng, 0.0, 1.0);
  const std::vector<int> fakes{1, 1, 1}, reals{0, 0, 0};
  EXPECT_EQ(reconstruction_loss(Var(x, false), Var(r, false), fakes).value()[0], 0.0);
  EXPECT_EQ(reconstruction_loss(Var(x, false), Var(x, false), reals).value()[0], 0.0);
  EXPECT_THROW(reconstruction_loss(Var(x, false), Var(Tensor({3, 3, 4, 5}), false), reals), ShapeError);
}

TEST(ReconstructionLoss, MatchesLoopOracle) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 20; ++t) {
    const int b = 1 + static_cast<int>(rng() % 5);
    const Tensor x = random_tensor({b, 3, 5, 6}, rng, 0.0, 1.0);
    const Tensor r = random_tensor({b, 3, 5, 6}, rng, 0.0, 1.0);
    const auto labels = t == 0 ? std::vector<int>(b, 0) : random_labels(b, rng);
    const double got = reconstruction_loss(Var(x, false), Var(r, false), labels).value()[0];
    EXPECT_NEAR(got, mse_loop(x, r, labels), 1e-12);
    EXPECT_GE(got, 0.0);
  }
}

TEST(ReconstructionLoss, IgnoresFakePixels) {
  std::mt19937_64 rng(7);
  const Tensor x = random_tensor({4, 3, 4, 4}, rng, 0.0, 1.0);
  const Tensor r = random_tensor({4, 3, 4, 4}, rng, 0.0, 1.0);
  const std::vector<int> labels{0, 1, 0, 1};
  Tensor x2 = x, r2 = r;
  const std::size_t per = x.size() / 4;
  for (std::size_t i = 0; i < per; ++i) {
    x2[per + i] = 0.9;
    r2[3 * per + i] = 0.1;
  }
  EXPECT_EQ(reconstruction_loss(Var(x, false), Var(r, false), labels).value()[0],
            reconstruction_loss(Var(x2, false), Var(r2, false), labels).value()[0]);
}

TEST(ReconstructionLoss, AbsoluteNormAlternative) {
  const Tensor x({1, 3, 1, 2}, {0.0, 0.5, 1.0, 0.2, 0.4, 0.6});
  const Tensor r({1, 3, 1, 2}, {0.1, 0.5, 0.7, 0.4, 0.4, 0.0});
  const std::vector<int> labels{0};
  const double l1 = reconstruction_loss(Var(x, false), Var(r, false), labels, ReconstructionNorm::absolute).value()[0];
  EXPECT_NEAR(l1, (0.1 + 0.0 + 0.3 + 0.2 + 0.0 + 0.6) / 6.0, 1e-15);
}

TEST(ReconstructionLoss, Gradient) {
  std::mt19937_64 rng(8);
  Var x = random_leaf({3, 3, 3, 3}, rng, 0.0, 1.0), r = random_leaf({3, 3, 3, 3}, rng, 0.0, 1.0);
  const std::vector<int> labels{0, 1, 0};
  for (ReconstructionNorm norm : {ReconstructionNorm::squared, ReconstructionNorm::absolute}) {
    GradCheckResult g = check_gradients([&] { return reconstruction_loss(x, r, labels, norm); }, {x, r});
    EXPECT_LT(g.rel_error, 1e-4);
    EXPECT_GT(g.analytic_norm, 0.0);
  }
}

TEST(TotalLoss, WeightedExample) {
  // Components (1, 2, 3, -1) with the default weights: 1 + 0.2 + 0.3 - 0.1.
  const double margin = std::log(std::exp(1.0) - 1.0);
  const Tensor logits({2, 2}, {0.0, margin, margin, 0.0});
  const std::vector<int> labels{0, 1};
  const Tensor image({2, 3, 2, 2});
  ReconstructionPair recon{Var(Tensor({2, 3, 2, 2}, std::sqrt(2.0)), false),
                           Var(Tensor({2, 3, 2, 2}, std::sqrt(3.0)), false)};
  const Var features(Tensor({2, 2}, {1.0, 2.0, -1.0, -2.0}), false);
  LossBreakdown l = total_loss(Var(logits, false), labels, Var(image, false), recon, features, LossWeights{});
  EXPECT_NEAR(l.cls(), 1.0, 1e-12);
  EXPECT_NEAR(l.r1(), 2.0, 1e-12);
  EXPECT_NEAR(l.r2(), 3.0, 1e-12);
  EXPECT_NEAR(l.m(), -1.0, 1e-12);
  EXPECT_NEAR(l.total_value(), 1.4, 1e-12);
}

TEST(TotalLoss, ZeroComponentsGiveZero) {
  const std::vector<int> labels{1, 1};
  const Tensor image({2, 3, 2, 2}, 0.5);
  LossWeights w{0.0, 0.0, 0.0};
  // Very confident correct logits drive the cross entropy to zero in double precision.
  const Tensor logits({2, 2}, {-800.0, 800.0, -800.0, 800.0});
  LossBreakdown l = total_loss(Var(logits, false), labels, Var(image, false), {}, Var(), w);
  EXPECT_EQ(l.total_value(), 0.0);
}

TEST(TotalLoss, MatchesManualComposition) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    const int b = 2 + static_cast<int>(rng() % 5);
    const auto labels = random_labels(b, rng);
    Var logits(random_tensor({b, 2}, rng, -3, 3), false);
    Var image(random_tensor({b, 3, 4, 4}, rng, 0, 1), false);
    ReconstructionPair recon{Var(random_tensor({b, 3, 4, 4}, rng, 0, 1), false),
                             Var(random_tensor({b, 3, 4, 4}, rng, 0, 1), false)};
    Var features(random_tensor({b, 6}, rng), false);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const LossWeights w{u(rng), u(rng), u(rng)};
    LossBreakdown l = total_loss(logits, labels, image, recon, features, w);
    const double cls = ag::cross_entropy(logits, labels).value()[0];
    const double r1 = reconstruction_loss(image, recon.first, labels).value()[0];
    const double r2 = reconstruction_loss(image, recon.second, labels).value()[0];
    const double m = metric_loss(features, labels).value()[0];
    EXPECT_NEAR(l.total_value(), cls + w.lambda1 * r1 + w.lambda2 * r2 + w.lambda3 * m, 1e-12);
    EXPECT_NEAR(l.total_value(), l.cls() + w.lambda1 * l.r1() + w.lambda2 * l.r2() + w.lambda3 * l.m(), 1e-12);
  }
}

TEST(TotalLoss, MissingTermsAreZeroAndWeightsValidated) {
  std::mt19937_64 rng(10);
  const std::vector<int> labels{0, 1};
  Var logits(random_tensor({2, 2}, rng), false);
  Var image(random_tensor({2, 3, 2, 2}, rng, 0, 1), false);
  LossBreakdown l = total_loss(logits, labels, image, {}, Var(), LossWeights{});
  EXPECT_EQ(l.r1(), 0.0);
  EXPECT_EQ(l.r2(), 0.0);
  EXPECT_EQ(l.m(), 0.0);
  EXPECT_NEAR(l.total_value(), l.cls(), 1e-15);
  EXPECT_THROW(total_loss(logits, labels, image, {}, Var(), LossWeights{-0.1, 0.1, 0.1}), ConfigError);
}

TEST(TotalLoss, Gradient) {
  std::mt19937_64 rng(11);
  const std::vector<int> labels{0, 1, 0, 1};
  Var logits = random_leaf({4, 2}, rng, -2, 2);
  Var image = random_leaf({4, 3, 3, 3}, rng, 0, 1);
  Var r1 = random_leaf({4, 3, 3, 3}, rng, 0, 1), r2 = random_leaf({4, 3, 3, 3}, rng, 0, 1);
  Var features = random_leaf({4, 5}, rng);
  auto f = [&] { return total_loss(logits, labels, image, {r1, r2}, features, LossWeights{0.3, 0.2, 0.5}).total; };
  GradCheckResult r = check_gradients(f, {logits, image, r1, r2, features});
  EXPECT_LT(r.rel_error, 1e-4);
  EXPECT_GT(r.analytic_norm, 0.0);
}
