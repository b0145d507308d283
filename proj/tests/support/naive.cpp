#include "naive.hpp"

#include <algorithm>
#include <cmath>

namespace forgerecon::testing::naive {

Tensor conv(const Tensor& x, const Tensor& w, const Tensor* b, int stride, int pad, int groups) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int O = w.dim(0), cg = w.dim(1), K = w.dim(2);
  const int og = O / groups;
  const int OH = (H + 2 * pad - K) / stride + 1, OW = (W + 2 * pad - K) / stride + 1;
  (void)C;
  Tensor y({B, O, OH, OW});
  for (int n = 0; n < B; ++n)
    for (int o = 0; o < O; ++o)
      for (int i = 0; i < OH; ++i)
        for (int j = 0; j < OW; ++j) {
          double s = b ? (*b)[o] : 0.0;
          const int g = o / og;
          for (int c = 0; c < cg; ++c)
            for (int ki = 0; ki < K; ++ki)
              for (int kj = 0; kj < K; ++kj) {
                const int yy = i * stride - pad + ki, xx = j * stride - pad + kj;
                if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
                s += w[((o * cg + c) * K + ki) * K + kj] * x.at(n, g * cg + c, yy, xx);
              }
          y.at(n, o, i, j) = s;
        }
  return y;
}

Tensor bilinear(const Tensor& x, int oh, int ow) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor y({B, C, oh, ow});
  auto coord = [](int o, int in, int out, int& i0, int& i1, double& t) {
    double s = (o + 0.5) * in / out - 0.5;
    s = std::max(s, 0.0);
    i0 = std::min(static_cast<int>(std::floor(s)), in - 1);
    i1 = std::min(i0 + 1, in - 1);
    t = s - i0;
  };
  for (int n = 0; n < B; ++n)
    for (int c = 0; c < C; ++c)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) {
          int y0, y1, x0, x1;
          double ty, tx;
          coord(i, H, oh, y0, y1, ty);
          coord(j, W, ow, x0, x1, tx);
          y.at(n, c, i, j) = (1 - ty) * ((1 - tx) * x.at(n, c, y0, x0) + tx * x.at(n, c, y0, x1)) +
                             ty * ((1 - tx) * x.at(n, c, y1, x0) + tx * x.at(n, c, y1, x1));
        }
  return y;
}

Tensor avg_pool(const Tensor& x, int oh, int ow) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor y({B, C, oh, ow});
  for (int n = 0; n < B; ++n)
    for (int c = 0; c < C; ++c)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) {
          const int y0 = i * H / oh, y1 = ((i + 1) * H + oh - 1) / oh;
          const int x0 = j * W / ow, x1 = ((j + 1) * W + ow - 1) / ow;
          double s = 0;
          for (int yy = y0; yy < y1; ++yy)
            for (int xx = x0; xx < x1; ++xx) s += x.at(n, c, yy, xx);
          y.at(n, c, i, j) = s / ((y1 - y0) * (x1 - x0));
        }
  return y;
}

Tensor spread(const Tensor& p, int h, int w) {
  const int B = p.dim(0), C = p.dim(1), ph = p.dim(2), pw = p.dim(3);
  Tensor y({B, C, h, w});
  for (int n = 0; n < B; ++n)
    for (int c = 0; c < C; ++c)
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) y.at(n, c, i, j) = p.at(n, c, i * ph / h, j * pw / w);
  return y;
}

namespace {
template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, F f) {
  Tensor y(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = f(a[i], b[i]);
  return y;
}
template <typename F>
Tensor map(const Tensor& a, F f) {
  Tensor y(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = f(a[i]);
  return y;
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return zip(a, b, [](double u, double v) { return u + v; }); }
Tensor sub(const Tensor& a, const Tensor& b) { return zip(a, b, [](double u, double v) { return u - v; }); }
Tensor mul(const Tensor& a, const Tensor& b) { return zip(a, b, [](double u, double v) { return u * v; }); }
Tensor scale(const Tensor& a, double s) { return map(a, [s](double u) { return u * s; }); }
Tensor sigmoid(const Tensor& a) { return map(a, [](double u) { return 1.0 / (1.0 + std::exp(-u)); }); }
Tensor relu(const Tensor& a) { return map(a, [](double u) { return u > 0 ? u : 0.0; }); }

Tensor concat(const Tensor& a, const Tensor& b) {
  const int B = a.dim(0), C1 = a.dim(1), C2 = b.dim(1), H = a.dim(2), W = a.dim(3);
  Tensor y({B, C1 + C2, H, W});
  for (int n = 0; n < B; ++n)
    for (int c = 0; c < C1 + C2; ++c)
      for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) y.at(n, c, i, j) = c < C1 ? a.at(n, c, i, j) : b.at(n, c - C1, i, j);
  return y;
}

Tensor gap(const Tensor& x) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor y({B, C});
  for (int n = 0; n < B; ++n)
    for (int c = 0; c < C; ++c) {
      double s = 0;
      for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) s += x.at(n, c, i, j);
      y[n * C + c] = s / (H * W);
    }
  return y;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor y({m, n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0;
      for (int t = 0; t < k; ++t) s += a[i * k + t] * b[t * n + j];
      y[i * n + j] = s;
    }
  return y;
}

Tensor transpose(const Tensor& a) {
  const int m = a.dim(0), n = a.dim(1);
  Tensor y({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) y[j * m + i] = a[i * n + j];
  return y;
}

Tensor tokens(const Tensor& x, int b) {
  const int C = x.dim(1), N = x.dim(2) * x.dim(3);
  Tensor y({C, N});
  for (int c = 0; c < C; ++c)
    for (int t = 0; t < N; ++t) y[c * N + t] = x[(static_cast<std::size_t>(b) * C + c) * N + t];
  return y;
}

Tensor softmax2d(const Tensor& a, int axis) {
  const int m = a.dim(0), n = a.dim(1);
  Tensor y(a.shape());
  if (axis == 1) {
    for (int i = 0; i < m; ++i) {
      double mx = -1e300, s = 0;
      for (int j = 0; j < n; ++j) mx = std::max(mx, a[i * n + j]);
      for (int j = 0; j < n; ++j) s += std::exp(a[i * n + j] - mx);
      for (int j = 0; j < n; ++j) y[i * n + j] = std::exp(a[i * n + j] - mx) / s;
    }
  } else {
    for (int j = 0; j < n; ++j) {
      double mx = -1e300, s = 0;
      for (int i = 0; i < m; ++i) mx = std::max(mx, a[i * n + j]);
      for (int i = 0; i < m; ++i) s += std::exp(a[i * n + j] - mx);
      for (int i = 0; i < m; ++i) y[i * n + j] = std::exp(a[i * n + j] - mx) / s;
    }
  }
  return y;
}

}  // namespace forgerecon::testing::naive
