#include <gtest/gtest.h>

#include <cstdint>
#include <random>

#include "forgerecon/errors.hpp"
#include "forgerecon/kernels.hpp"
#include "support/gradcheck.hpp"

using namespace forgerecon;
using forgerecon::testing::random_tensor;

namespace {

struct ConvCase {
  int batch, cin, cout, h, w, k, stride, pad, groups;
};

class ConvAgreement : public ::testing::TestWithParam<ConvCase> {};

TEST_P(ConvAgreement, FastPathMatchesReference) {
  const ConvCase c = GetParam();
  std::mt19937_64 rng(c.cin * 131 + c.k * 7 + c.stride);
  const Tensor x = random_tensor({c.batch, c.cin, c.h, c.w}, rng);
  const Tensor w = random_tensor({c.cout, c.cin / c.groups, c.k, c.k}, rng);
  const Tensor b = random_tensor({c.cout}, rng);
  const kernels::ConvGeometry g{c.stride, c.pad, c.groups};

  const Tensor fast = kernels::conv2d_forward(x, w, &b, g);
  const Tensor ref = kernels::reference::conv2d_forward(x, w, &b, g);
  ASSERT_EQ(fast.shape(), ref.shape());
  EXPECT_LT(max_abs_diff(fast, ref), 1e-12);

  const Tensor dy = random_tensor(fast.shape(), rng);
  const auto fg = kernels::conv2d_backward(x, w, dy, g, true, true, true);
  const auto rg = kernels::reference::conv2d_backward(x, w, dy, g);
  EXPECT_LT(max_abs_diff(fg.dx, rg.dx), 1e-12);
  EXPECT_LT(max_abs_diff(fg.dw, rg.dw), 1e-11);
  EXPECT_LT(max_abs_diff(fg.db, rg.db), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Geometries, ConvAgreement,
                         ::testing::Values(ConvCase{2, 3, 4, 7, 6, 3, 1, 1, 1},   // plain 3x3
                                           ConvCase{2, 4, 6, 9, 9, 3, 2, 1, 1},   // strided
                                           ConvCase{3, 5, 7, 4, 5, 1, 1, 0, 1},   // pointwise
                                           ConvCase{2, 6, 4, 8, 8, 1, 2, 0, 1},   // strided 1x1
                                           ConvCase{2, 6, 6, 7, 7, 3, 1, 1, 6},   // depthwise
                                           ConvCase{2, 6, 6, 8, 7, 3, 2, 1, 6},   // strided depthwise
                                           ConvCase{2, 4, 6, 6, 6, 3, 1, 1, 2},   // grouped
                                           ConvCase{1, 2, 3, 5, 5, 5, 1, 2, 1}));  // 5x5

TEST(Conv, HandComputedSingleChannel) {
  // 3x3 input, 2x2 kernel, no padding: each output is a 2x2 window dot product.
  const Tensor x({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const Tensor w({1, 1, 2, 2}, {1, 0, 0, -1});
  const Tensor b({1}, {0.5});
  const Tensor y = kernels::conv2d_forward(x, w, &b, {});
  ASSERT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  for (double v : y.values()) EXPECT_DOUBLE_EQ(v, 1.0 - 5.0 + 0.5);
}

TEST(Conv, RejectsChannelMismatch) {
  const Tensor x({1, 3, 4, 4});
  const Tensor w({2, 2, 3, 3});
  EXPECT_THROW(kernels::conv2d_forward(x, w, nullptr, {1, 1, 1}), ConfigError);
}

TEST(Conv, OutputSize) {
  EXPECT_EQ(kernels::conv_out_size(64, 3, 2, 1), 32);
  EXPECT_EQ(kernels::conv_out_size(299, 3, 2, 1), 150);
  EXPECT_EQ(kernels::conv_out_size(5, 1, 1, 0), 5);
}

TEST(Resize, MatchesReferenceAndIdentity) {
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor({2, 3, 5, 7}, rng);
  for (auto [oh, ow] : {std::pair{10, 14}, {3, 4}, {5, 7}, {1, 1}, {8, 3}}) {
    const Tensor fast = kernels::resize_bilinear_forward(x, oh, ow);
    const Tensor ref = kernels::reference::resize_bilinear_forward(x, oh, ow);
    EXPECT_LT(max_abs_diff(fast, ref), 1e-12);
  }
  EXPECT_TRUE(bit_identical(kernels::resize_bilinear_forward(x, 5, 7), x));
}

TEST(Resize, BackwardIsAdjointOfForward) {
  // <R x, y> == <x, R^T y> for the linear resize operator.
  std::mt19937_64 rng(5);
  const Tensor x = random_tensor({1, 2, 4, 6}, rng);
  const Tensor y = random_tensor({1, 2, 7, 5}, rng);
  const Tensor rx = kernels::resize_bilinear_forward(x, 7, 5);
  const Tensor rty = kernels::resize_bilinear_backward(y, 4, 6);
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += rx[i] * y[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * rty[i];
  EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(Pool, MatchesReferenceAndAdjoint) {
  std::mt19937_64 rng(6);
  const Tensor x = random_tensor({2, 3, 7, 5}, rng);
  for (auto [oh, ow] : {std::pair{1, 1}, {2, 2}, {3, 2}, {7, 5}}) {
    const Tensor fast = kernels::adaptive_avg_pool_forward(x, oh, ow);
    EXPECT_LT(max_abs_diff(fast, kernels::reference::adaptive_avg_pool_forward(x, oh, ow)), 1e-12);
    const Tensor y = random_tensor(fast.shape(), rng);
    const Tensor back = kernels::adaptive_avg_pool_backward(y, 7, 5);
    double lhs = 0, rhs = 0;
    for (std::size_t i = 0; i < y.size(); ++i) lhs += fast[i] * y[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * back[i];
    EXPECT_NEAR(lhs, rhs, 1e-12);
  }
  // 1x1 pooling is the plain mean.
  const Tensor g = kernels::adaptive_avg_pool_forward(x, 1, 1);
  double s = 0;
  for (int i = 0; i < 35; ++i) s += x[i];
  EXPECT_NEAR(g[0], s / 35.0, 1e-14);
}

TEST(Bmm, AllTransposeCombinationsAndBroadcast) {
  std::mt19937_64 rng(7);
  for (bool ta : {false, true}) {
    for (bool tb : {false, true}) {
      const Tensor a = random_tensor(ta ? Shape{3, 4, 2} : Shape{3, 2, 4}, rng);
      const Tensor b = random_tensor(tb ? Shape{3, 5, 4} : Shape{3, 4, 5}, rng);
      EXPECT_LT(max_abs_diff(kernels::bmm(a, b, ta, tb), kernels::reference::bmm(a, b, ta, tb)), 1e-12);
      const Tensor shared = random_tensor(ta ? Shape{4, 2} : Shape{2, 4}, rng);
      const Tensor out = kernels::bmm(shared, b, ta, tb);
      EXPECT_EQ(out.shape(), (Shape{3, 2, 5}));
      EXPECT_LT(max_abs_diff(out, kernels::reference::bmm(shared, b, ta, tb)), 1e-12);
    }
  }
}

}  // namespace

TEST(Storage, BuffersAreCacheLineAligned) {
  for (int n : {1, 3, 7, 100, 4097}) {
    Tensor t({n});
    EXPECT_EQ(reinterpret_cast<std::uintptr_t>(t.data()) % kBufferAlignment, 0u);
    Tensor copy = t;
    EXPECT_EQ(reinterpret_cast<std::uintptr_t>(copy.data()) % kBufferAlignment, 0u);
    EXPECT_EQ(reinterpret_cast<std::uintptr_t>(t.reshaped({1, n}).data()) % kBufferAlignment, 0u);
  }
}

TEST(Storage, ProductsIndependentOfHeapPlacement) {
  // Vector-shaped products take alignment-sensitive paths; interleaved
  // allocations shift where the operands land.
  std::mt19937_64 rng(40);
  const Tensor a = random_tensor({1, 1, 3}, rng), b = random_tensor({1, 3, 4}, rng);
  const Tensor ref = kernels::bmm(a, b, false, false);
  std::vector<Tensor> spacers;
  for (int i = 0; i < 16; ++i) {
    spacers.emplace_back(Shape{i + 1});
    const Tensor a2 = a, b2 = b;
    EXPECT_TRUE(bit_identical(kernels::bmm(a2, b2, false, false), ref));
  }
}
