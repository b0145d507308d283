#include <gtest/gtest.h>

#include "forgerecon/discrepancy_attention.hpp"
#include "forgerecon/errors.hpp"
#include "forgerecon/ops.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "support/block_oracles.hpp"
#include "support/naive.hpp"

using namespace forgerecon;
using namespace forgerecon::testing;

namespace {

AttentionConfig block_config(int in, int c, int pool = 1, MemoryTying tying = MemoryTying::tied_transpose) {
  AttentionConfig cfg;
  cfg.in_channels = in;
  cfg.channels = c;
  cfg.pool_h = cfg.pool_w = pool;
  cfg.tying = tying;
  return cfg;
}

}  // namespace

TEST(Attention, HandSteppedConstantInput) {
  // One channel, 2x2 input of 0.5. conv3 only has a centre tap, so F is
  // constant, D' is zero and every attention entry is 1/4 / (1 + eps).
  ParameterStore store;
  Rng rng(1);
  DiscrepancyAttention blk(store, "a", block_config(1, 1), rng);
  Tensor w3({1, 1, 3, 3});
  w3[4] = 2.0;
  Var(blk.conv3().weight).mutable_value() = w3;
  set_all(blk.conv3().bias, 0.1);
  Tensor m({4, 1});
  for (int k = 0; k < 4; ++k) m[k] = k + 1.0;
  Var(blk.memory()).mutable_value() = m;
  set_all(blk.conv1().weight, 3.0);
  set_all(blk.conv1().bias, -0.2);

  const Tensor out = blk.forward(Var(Tensor({1, 1, 2, 2}, 0.5), false)).value();
  // F = 2 * 0.5 + 0.1 = 1.1; restored = (1+2+3+4) * 0.25 / (1 + eps)
  const double restored = 10.0 * 0.25 / (1.0 + kMemoryNormEps);
  const double expected = 3.0 * restored - 0.2 + 1.1;
  for (double v : out.values()) EXPECT_NEAR(v, expected, 1e-12);
}

TEST(Attention, ConstantChannelsGiveZeroDeviation) {
  // Per-channel-constant F with pool (1,1): the block output is the
  // normalised-zero path plus conv3(X), whatever the memory holds.
  ParameterStore store;
  Rng rng(2);
  DiscrepancyAttention blk(store, "a", block_config(3, 4), rng);
  Tensor w3 = blk.conv3().weight.value();
  for (std::size_t i = 0; i < w3.size(); ++i)
    if (i % 9 != 4) w3[i] = 0.0;
  Var(blk.conv3().weight).mutable_value() = w3;
  Tensor x({1, 3, 5, 5});
  for (int c = 0; c < 3; ++c)
    for (int p = 0; p < 25; ++p) x[c * 25 + p] = 0.3 * (c + 1);
  const Tensor out = blk.forward(Var(x, false)).value();
  const Tensor f = blk.conv3()(Var(x, false)).value();
  const Tensor& m = blk.memory().value();
  const int c = 4, n = 25;
  const double slot = (1.0 / (4 * c)) / (kMemoryNormEps + n / (4.0 * c));
  for (int o = 0; o < c; ++o) {
    double v = blk.conv1().bias.value()[o];
    for (int ci = 0; ci < c; ++ci) {
      double colsum = 0.0;
      for (int k = 0; k < 4 * c; ++k) colsum += m[k * c + ci];
      v += blk.conv1().weight.value()[o * c + ci] * colsum * slot;
    }
    for (int p = 0; p < n; ++p) EXPECT_NEAR(out[o * n + p], v + f[o * n + p], 1e-12);
  }
}

TEST(Attention, ZeroInputGivesConstantNormalisedPath) {
  ParameterStore store;
  Rng rng(3);
  DiscrepancyAttention blk(store, "a", block_config(4, 4), rng);
  zero_biases(store);
  const Tensor out = blk.forward(Var(Tensor({2, 4, 3, 3}), false)).value();
  const Tensor expected = attention_oracle(blk, Tensor({2, 4, 3, 3}));
  EXPECT_LT(max_abs_diff(out, expected), 1e-12);
  for (int q = 0; q < 8; ++q)
    for (int p = 1; p < 9; ++p) EXPECT_NEAR(out[q * 9 + p], out[q * 9], 1e-12);

  set_all(blk.conv1().weight, 0.0);
  EXPECT_TRUE(all_zero(blk.forward(Var(Tensor({2, 4, 3, 3}), false)).value()));
}

TEST(Attention, ZeroConv1IsResidualIdentity) {
  ParameterStore store;
  Rng rng(4);
  DiscrepancyAttention blk(store, "a", block_config(3, 5, 2), rng);
  set_all(blk.conv1().weight, 0.0);
  set_all(blk.conv1().bias, 0.0);
  std::mt19937_64 data(5);
  Var x(random_tensor({2, 3, 6, 7}, data), false);
  EXPECT_TRUE(bit_identical(blk.forward(x).value(), blk.conv3()(x).value()));
}

TEST(Attention, ShapePreserved) {
  ParameterStore store;
  Rng rng(5);
  DiscrepancyAttention blk(store, "a", block_config(8, 8), rng);
  std::mt19937_64 data(6);
  EXPECT_EQ(blk.forward(Var(random_tensor({1, 8, 16, 16}, data), false)).shape(), (Shape{1, 8, 16, 16}));
}

TEST(Attention, MatchesLoopOracle) {
  std::mt19937_64 data(7);
  for (int pool : {1, 2, 3}) {
    for (MemoryTying tying : {MemoryTying::tied_transpose, MemoryTying::init_copy}) {
      ParameterStore store;
      Rng rng(8 + pool);
      DiscrepancyAttention blk(store, "a", block_config(3, 4, pool, tying), rng);
      randomize_biases(store, data, 0.5);
      if (tying == MemoryTying::init_copy) randomize(blk.memory_out(), data, 0.5);
      const Tensor x = random_tensor({2, 3, 5, 6}, data);
      EXPECT_LT(max_abs_diff(blk.forward(Var(x, false)).value(), attention_oracle(blk, x)), 1e-12)
          << "pool " << pool;
    }
  }
}

TEST(Attention, InitCopyStartsEqualToTied) {
  ParameterStore a, b;
  Rng ra(9), rb(9);
  DiscrepancyAttention tied(a, "a", block_config(3, 4), ra);
  DiscrepancyAttention copy(b, "a", block_config(3, 4, 1, MemoryTying::init_copy), rb);
  EXPECT_EQ(b.size(), a.size() + 1);
  std::mt19937_64 data(10);
  Var x(random_tensor({1, 3, 4, 4}, data), false);
  EXPECT_LT(max_abs_diff(tied.forward(x).value(), copy.forward(x).value()), 1e-12);
}

TEST(Attention, Errors) {
  ParameterStore store;
  Rng rng(11);
  DiscrepancyAttention blk(store, "a", block_config(4, 4), rng);
  EXPECT_THROW(blk.forward(Var(Tensor({1, 4, 0, 6}), false)), EmptyInputError);
  EXPECT_THROW(blk.forward(Var(Tensor({1, 3, 4, 4}), false)), ConfigError);
  ParameterStore other;
  EXPECT_THROW(DiscrepancyAttention(other, "b", block_config(0, 4), rng), ConfigError);
}

TEST(Attention, BlockGradient) {
  ParameterStore store;
  Rng rng(12);
  DiscrepancyAttention blk(store, "a", block_config(4, 4), rng);
  std::mt19937_64 data(13);
  randomize_biases(store, data, 0.3);
  Var x = random_leaf({1, 4, 6, 6}, data);
  std::vector<Var> leaves{x};
  for (const auto& [name, v] : store.entries()) leaves.push_back(v);
  auto f = [&] { return random_projection(blk.forward(x), 14); };
  GradCheckResult r = check_gradients(f, leaves, 40, 15);
  EXPECT_LT(r.rel_error, 1e-4);
  EXPECT_GT(r.analytic_norm, 0.0);
}

namespace {

struct CascadeFixture {
  BackboneConfig backbone = BackboneConfig::tiny(32);
  ParameterStore store;
  Rng rng{21};
  AttentionCascade cascade;
  FeaturePyramid pyramid;

  explicit CascadeFixture(std::uint64_t seed)
      : backbone(narrow()), cascade(store, backbone, 1, MemoryTying::tied_transpose, rng) {
    std::mt19937_64 data(seed);
    randomize_biases(store, data, 0.2);
    const auto sizes = backbone.stage_sizes();
    for (int i = 0; i < 5; ++i) {
      pyramid.F[i] = Var(random_tensor({2, backbone.stage_channels[i], sizes[i].first, sizes[i].second}, data), false);
    }
  }
  static BackboneConfig narrow() {
    BackboneConfig c = BackboneConfig::tiny(32);
    c.stage_channels = {3, 4, 5, 6, 7};
    return c;
  }
};

}  // namespace

TEST(AttentionCascade, ShapesFollowPyramid) {
  BackboneConfig cfg = BackboneConfig::tiny(64);
  ParameterStore store;
  Rng rng(22);
  AttentionCascade cascade(store, cfg, 1, MemoryTying::tied_transpose, rng);
  FeaturePyramid p;
  const auto sizes = cfg.stage_sizes();
  std::mt19937_64 data(23);
  for (int i = 0; i < 5; ++i) {
    p.F[i] = Var(random_tensor({1, cfg.stage_channels[i], sizes[i].first, sizes[i].second}, data), false);
  }
  NoGradGuard guard;
  cascade.apply(p);
  EXPECT_TRUE(p.has_attention);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(p.D[i].dim(1), cfg.stage_channels[i]);
    EXPECT_EQ(p.D[i].dim(2), p.F[i].dim(2));
    EXPECT_EQ(p.D[i].dim(3), p.F[i].dim(3));
  }
}

TEST(AttentionCascade, MatchesUnrolledOracle) {
  CascadeFixture fx(24);
  fx.cascade.apply(fx.pyramid);
  const auto& blocks = fx.cascade.blocks();
  const auto& F = fx.pyramid.F;
  const Tensor d1 = attention_oracle(blocks[0], F[0].value());
  const Tensor d2 = attention_oracle(blocks[1], naive::concat(naive::bilinear(d1, F[1].dim(2), F[1].dim(3)), F[1].value()));
  const Tensor d3 = attention_oracle(blocks[2], naive::concat(naive::bilinear(d2, F[2].dim(2), F[2].dim(3)), F[2].value()));
  const Tensor d4 = attention_oracle(blocks[3], naive::concat(naive::bilinear(d3, F[3].dim(2), F[3].dim(3)), F[3].value()));
  EXPECT_LT(max_abs_diff(fx.pyramid.D[0].value(), d1), 1e-12);
  EXPECT_LT(max_abs_diff(fx.pyramid.D[1].value(), d2), 1e-12);
  EXPECT_LT(max_abs_diff(fx.pyramid.D[2].value(), d3), 1e-12);
  EXPECT_LT(max_abs_diff(fx.pyramid.D[3].value(), d4), 1e-12);
}

TEST(AttentionCascade, ZeroPyramidWithZeroConv1IsZero) {
  CascadeFixture fx(25);
  zero_biases(fx.store);
  for (const auto& blk : fx.cascade.blocks()) set_all(blk.conv1().weight, 0.0);
  for (int i = 0; i < 5; ++i) fx.pyramid.F[i] = Var(Tensor(fx.pyramid.F[i].shape()), false);
  fx.cascade.apply(fx.pyramid);
  for (int i = 0; i < 4; ++i) EXPECT_TRUE(all_zero(fx.pyramid.D[i].value())) << "D" << i + 1;
}

TEST(AttentionCascade, MissingFeatureThrows) {
  CascadeFixture fx(26);
  fx.pyramid.F[2] = Var();
  EXPECT_THROW(fx.cascade.apply(fx.pyramid), ConfigError);
}
