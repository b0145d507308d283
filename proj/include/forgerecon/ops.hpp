#pragma once

// Differentiable tensor operations used to compose every network block.

#include <span>
#include <vector>

#include "forgerecon/autograd.hpp"
#include "forgerecon/kernels.hpp"

namespace forgerecon::ag {

using kernels::ConvGeometry;

// bias may be an undefined Var.
Var conv2d(const Var& x, const Var& weight, const Var& bias, const ConvGeometry& geom = {});

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var add_scalar(const Var& a, double value);

Var relu(const Var& x);
Var sigmoid(const Var& x);
Var abs(const Var& x);
// Hard clamp; gradient passes only where lo < x < hi.
Var clamp(const Var& x, double lo, double hi);

// Softmax over one axis of any-rank tensor.
Var softmax(const Var& x, int axis);
// x / (eps + sum over axis of x).
Var sum_normalize(const Var& x, int axis, double eps);

Var resize_bilinear(const Var& x, int out_h, int out_w);
Var adaptive_avg_pool(const Var& x, int out_h, int out_w);
// Spreads each pooled cell back over the pixels whose floor-mapped cell it is.
Var broadcast_cells(const Var& pooled, int out_h, int out_w);

Var concat_channels(const std::vector<Var>& parts);
Var reshape(const Var& x, Shape shape);
// Batched matrix product; a rank-2 operand is shared across the batch.
Var bmm(const Var& a, const Var& b, bool trans_a = false, bool trans_b = false);

// (B, C, H, W) -> (B, C)
Var global_avg_pool(const Var& x);
// x: (B, in), weight: (out, in), bias: (out) or undefined.
Var linear(const Var& x, const Var& weight, const Var& bias);
// x: (B, C, H, W) scaled per (batch, channel) by s: (B, C).
Var scale_channels(const Var& x, const Var& s);
// 1D cross-correlation along the channel axis of x: (B, C) with an odd-length
// kernel and zero padding, output (B, C).
Var channel_conv1d(const Var& x, const Var& kernel);
// Per-sample normalisation over channel groups of x: (B, C, H, W), followed by
// the per-channel affine gamma * xhat + beta. C must be divisible by groups.
Var group_norm(const Var& x, const Var& gamma, const Var& beta, int groups, double eps = 1e-5);

Var sum(const Var& x);
Var mean(const Var& x);
Var detach(const Var& x);

// Mean over the batch of -log softmax(logits)[label]; logits (B, K).
Var cross_entropy(const Var& logits, std::span<const int> labels);

}  // namespace forgerecon::ag
