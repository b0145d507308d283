#pragma once

// Numeric kernels behind the autograd ops. The functions in `kernels` are the
// OpenMP-parallel production path (im2col + Eigen GEMM for convolutions); the
// functions in `kernels::reference` are plain serial loops kept for testing and
// benchmarking the production path.

#include "forgerecon/tensor.hpp"

namespace forgerecon::kernels {

struct ConvGeometry {
  int stride = 1;
  int pad = 0;
  int groups = 1;
};

int conv_out_size(int in, int kernel, int stride, int pad);

// x: (B, Cin, H, W), w: (Cout, Cin/groups, kh, kw), bias: (Cout) or null.
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, const ConvGeometry& geom);

struct ConvGrads {
  Tensor dx;
  Tensor dw;
  Tensor db;
};

// Gradients of a conv2d given the upstream gradient dy. Only requested
// outputs are populated.
ConvGrads conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, const ConvGeometry& geom,
                          bool need_dx, bool need_dw, bool need_db);

// Bilinear resize with half-pixel centers (align_corners = false).
Tensor resize_bilinear_forward(const Tensor& x, int out_h, int out_w);
Tensor resize_bilinear_backward(const Tensor& dy, int in_h, int in_w);

// Adaptive average pooling with floor/ceil bin edges.
Tensor adaptive_avg_pool_forward(const Tensor& x, int out_h, int out_w);
Tensor adaptive_avg_pool_backward(const Tensor& dy, int in_h, int in_w);

// Batched matrix product. A rank-2 operand is broadcast over the batch.
// a: (B, M, K) or (M, K) [transposed if trans_a], b likewise.
Tensor bmm(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b);

namespace reference {

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, const ConvGeometry& geom);
ConvGrads conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, const ConvGeometry& geom);
Tensor resize_bilinear_forward(const Tensor& x, int out_h, int out_w);
Tensor adaptive_avg_pool_forward(const Tensor& x, int out_h, int out_w);
Tensor bmm(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b);

}  // namespace reference

}  // namespace forgerecon::kernels
