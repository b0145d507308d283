#include <gtest/gtest.h>

#include <cmath>

#include "forgerecon/detector.hpp"
#include "forgerecon/errors.hpp"
#include "forgerecon/ops.hpp"
#include "support/block_oracles.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "support/naive.hpp"

using namespace forgerecon;
using namespace forgerecon::testing;

TEST(DifferenceMask, MatchesAbsoluteDifference) {
  std::mt19937_64 data(1);
  const Tensor x = random_tensor({2, 3, 5, 4}, data, 0.0, 1.0);
  const Tensor y = random_tensor({2, 3, 5, 4}, data, 0.0, 1.0);
  const Tensor r = difference_mask(Var(x, false), Var(y, false)).value();
  ASSERT_EQ(r.shape(), x.shape());
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_EQ(r[i], std::fabs(x[i] - y[i]));
    EXPECT_GE(r[i], 0.0);
  }
}

TEST(DifferenceMask, Examples) {
  std::mt19937_64 data(2);
  const Tensor x = random_tensor({1, 3, 4, 4}, data, 0.0, 1.0);
  EXPECT_TRUE(all_zero(difference_mask(Var(x, false), Var(x, false)).value()));
  const Tensor ones = difference_mask(Var(Tensor({1, 3, 2, 2}, 1.0), false), Var(Tensor({1, 3, 2, 2}), false)).value();
  for (double v : ones.values()) EXPECT_EQ(v, 1.0);
  EXPECT_THROW(difference_mask(Var(Tensor({1, 3, 2, 2}), false), Var(Tensor({1, 3, 2, 3}), false)), ShapeError);
}

namespace {

BackboneConfig narrow_backbone() {
  BackboneConfig c = BackboneConfig::tiny(32);
  c.stage_channels = {3, 4, 5, 6, 7};
  return c;
}

struct FusionFixture {
  BackboneConfig cfg = narrow_backbone();
  ParameterStore store;
  Rng rng{3};
  EncodingFusion fusion{store, cfg, rng};
  Tensor d4, f5;
  FusionFixture() {
    std::mt19937_64 data(4);
    const auto s = cfg.stage_sizes();
    d4 = random_tensor({2, cfg.stage_channels[3], s[3].first, s[3].second}, data);
    f5 = random_tensor({2, cfg.stage_channels[4], s[4].first, s[4].second}, data);
    randomize_biases(store, data, 0.3);
  }
};

}  // namespace

TEST(EncodingFusion, ZeroProjectionPassesF5Through) {
  FusionFixture fx;
  set_all(fx.fusion.projection().weight, 0.0);
  set_all(fx.fusion.projection().bias, 0.0);
  EXPECT_TRUE(bit_identical(fx.fusion.fuse(Var(fx.d4, false), Var(fx.f5, false)).value(), fx.f5));
}

TEST(EncodingFusion, ZeroF5GivesProjection) {
  FusionFixture fx;
  const Tensor zero(fx.f5.shape());
  const Tensor got = fx.fusion.fuse(Var(fx.d4, false), Var(zero, false)).value();
  EXPECT_TRUE(bit_identical(got, fx.fusion.projection()(Var(fx.d4, false)).value()));
}

TEST(EncodingFusion, MatchesOracleAndRejectsMisalignment) {
  FusionFixture fx;
  const Tensor got = fx.fusion.fuse(Var(fx.d4, false), Var(fx.f5, false)).value();
  EXPECT_EQ(got.shape(), fx.f5.shape());
  EXPECT_LT(max_abs_diff(got, naive::add(naive_conv(fx.fusion.projection(), fx.d4), fx.f5)), 1e-12);
  Tensor bad({2, fx.f5.dim(1), fx.f5.dim(2) + 1, fx.f5.dim(3)});
  EXPECT_THROW(fx.fusion.fuse(Var(fx.d4, false), Var(bad, false)), ShapeError);
}

namespace {

struct AggregationFixture {
  ParameterStore store;
  Rng rng;
  FeatureAggregation rfa;
  Tensor mask, encoding;
  AggregationFixture(int c, int out, std::uint64_t seed) : rng(seed), rfa(store, "rfa", c, out, rng) {
    std::mt19937_64 data(seed + 1);
    randomize_biases(store, data, 0.3);
    mask = random_tensor({2, 3, 16, 16}, data, 0.0, 1.0);
    encoding = random_tensor({2, c, 4, 4}, data);
  }
};

}  // namespace

TEST(FeatureAggregation, ConstantGateScalesEncoding) {
  AggregationFixture fx(5, 6, 5);
  set_all(fx.rfa.mask_conv().weight, 0.0);
  set_all(fx.rfa.mask_conv().bias, 0.0);
  const Tensor got = fx.rfa.fused(Var(fx.mask, false), Var(fx.encoding, false)).value();
  const Tensor want = fx.rfa.fuse_conv()(Var(naive::scale(fx.encoding, 1.5), false)).value();
  EXPECT_LT(max_abs_diff(got, want), 1e-12);
}

TEST(FeatureAggregation, MatchesStraightLineOracle) {
  AggregationFixture fx(5, 6, 6);
  const Tensor got = fx.rfa.forward(Var(fx.mask, false), Var(fx.encoding, false)).value();
  EXPECT_EQ(got.shape(), (Shape{2, 6, 4, 4}));
  EXPECT_LT(max_abs_diff(got, aggregation_oracle(fx.rfa, fx.mask, fx.encoding)), 1e-12);
}

TEST(FeatureAggregation, ShapeErrors) {
  AggregationFixture fx(5, 6, 7);
  EXPECT_THROW(fx.rfa.forward(Var(Tensor({2, 1, 16, 16}), false), Var(fx.encoding, false)), ShapeError);
  EXPECT_THROW(fx.rfa.forward(Var(fx.mask, false), Var(Tensor({2, 4, 4, 4}), false)), ShapeError);
  EXPECT_THROW(fx.rfa.forward(Var(fx.mask, false), Var(Tensor({3, 5, 4, 4}), false)), ShapeError);
}

TEST(FeatureAggregation, Gradient) {
  AggregationFixture fx(3, 4, 8);
  Var mask(fx.mask, true), enc(fx.encoding, true);
  std::vector<Var> leaves{mask, enc};
  for (const auto& [name, v] : fx.store.entries()) leaves.push_back(v);
  auto f = [&] { return random_projection(fx.rfa.forward(mask, enc), 9); };
  GradCheckResult r = check_gradients(f, leaves, 25, 10);
  EXPECT_LT(r.rel_error, 1e-4);
  EXPECT_GT(r.analytic_norm, 0.0);
}

TEST(MaskAddition, MatchesOracle) {
  ParameterStore store;
  Rng rng(11);
  MaskAddition add(store, "add", 5, rng);
  std::mt19937_64 data(12);
  randomize_biases(store, data, 0.3);
  const Tensor mask = random_tensor({2, 3, 16, 16}, data, 0.0, 1.0);
  const Tensor enc = random_tensor({2, 5, 4, 4}, data);
  const Tensor got = add.forward(Var(mask, false), Var(enc, false)).value();
  const Var& w = store.entries().at(0).second;
  const Var& b = store.entries().at(1).second;
  const Tensor want = naive::add(enc, naive::conv(naive::bilinear(mask, 4, 4), w.value(), &b.value(), 1, 0));
  EXPECT_LT(max_abs_diff(got, want), 1e-12);
}

namespace {

struct ClassifierFixture {
  ParameterStore store;
  Rng rng{13};
  Classifier cls{store, "cls", 6, rng};
  Tensor a, b;
  ClassifierFixture() {
    std::mt19937_64 data(14);
    randomize(cls.weight(), data, 1.0);
    randomize(cls.bias(), data, 0.5);
    a = random_tensor({3, 6, 4, 4}, data);
    b = random_tensor({3, 6, 4, 4}, data);
  }
};

}  // namespace

TEST(Classifier, MatchesOracle) {
  ClassifierFixture fx;
  const Tensor got = fx.cls.classify({Var(fx.a, false), Var(fx.b, false)}).value();
  EXPECT_EQ(got.shape(), (Shape{3, 2}));
  EXPECT_LT(max_abs_diff(got, classifier_oracle(fx.cls, {fx.a, fx.b})), 1e-12);
  const Tensor single = fx.cls.classify({Var(fx.a, false)}).value();
  EXPECT_LT(max_abs_diff(single, classifier_oracle(fx.cls, {fx.a})), 1e-12);
}

TEST(Classifier, SymmetricInBranches) {
  ClassifierFixture fx;
  EXPECT_TRUE(bit_identical(fx.cls.classify({Var(fx.a, false), Var(fx.b, false)}).value(),
                            fx.cls.classify({Var(fx.b, false), Var(fx.a, false)}).value()));
}

TEST(Classifier, ZeroAffineGivesZeroLogits) {
  ClassifierFixture fx;
  set_all(fx.cls.weight(), 0.0);
  set_all(fx.cls.bias(), 0.0);
  EXPECT_TRUE(all_zero(fx.cls.classify({Var(fx.a, false), Var(fx.a, false)}).value()));
}

TEST(Classifier, Errors) {
  ClassifierFixture fx;
  EXPECT_THROW(fx.cls.classify({}), ConfigError);
  EXPECT_THROW(fx.cls.classify({Var(fx.a, false), Var(Tensor({3, 6, 2, 2}), false)}), ShapeError);
}

TEST(Classifier, Gradient) {
  ClassifierFixture fx;
  Var a(fx.a, true), b(fx.b, true);
  auto f = [&] { return random_projection(fx.cls.classify({a, b}), 15); };
  GradCheckResult r = check_gradients(f, {a, b, fx.cls.weight(), fx.cls.bias()}, 30, 16);
  EXPECT_LT(r.rel_error, 1e-4);
  EXPECT_GT(r.analytic_norm, 0.0);
}
