#include <algorithm>
#include <cmath>

#include "forgerecon/errors.hpp"
#include "forgerecon/kernels.hpp"

namespace forgerecon::kernels::reference {

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, const ConvGeometry& geom) {
  const int batch = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int cout = w.dim(0), cin_g = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  if (cin % geom.groups != 0 || cin / geom.groups != cin_g || cout % geom.groups != 0) {
    throw ConfigError("reference conv2d channel mismatch");
  }
  const int cout_g = cout / geom.groups;
  const int oh = conv_out_size(h, kh, geom.stride, geom.pad);
  const int ow = conv_out_size(wd, kw, geom.stride, geom.pad);
  Tensor y({batch, cout, oh, ow});
  for (int b = 0; b < batch; ++b) {
    for (int co = 0; co < cout; ++co) {
      const int grp = co / cout_g;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          double acc = bias ? (*bias)[co] : 0.0;
          for (int ci = 0; ci < cin_g; ++ci) {
            for (int ki = 0; ki < kh; ++ki) {
              for (int kj = 0; kj < kw; ++kj) {
                const int iy = oy * geom.stride - geom.pad + ki;
                const int ix = ox * geom.stride - geom.pad + kj;
                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                acc += w.at(co, ci, ki, kj) * x.at(b, grp * cin_g + ci, iy, ix);
              }
            }
          }
          y.at(b, co, oy, ox) = acc;
        }
      }
    }
  }
  return y;
}

ConvGrads conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, const ConvGeometry& geom) {
  const int batch = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int cout = w.dim(0), cin_g = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  const int cout_g = cout / geom.groups;
  const int oh = dy.dim(2), ow = dy.dim(3);
  (void)cin;
  ConvGrads g{Tensor(x.shape()), Tensor(w.shape()), Tensor({cout})};
  for (int b = 0; b < batch; ++b) {
    for (int co = 0; co < cout; ++co) {
      const int grp = co / cout_g;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const double gv = dy.at(b, co, oy, ox);
          g.db[co] += gv;
          for (int ci = 0; ci < cin_g; ++ci) {
            for (int ki = 0; ki < kh; ++ki) {
              for (int kj = 0; kj < kw; ++kj) {
                const int iy = oy * geom.stride - geom.pad + ki;
                const int ix = ox * geom.stride - geom.pad + kj;
                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                g.dw.at(co, ci, ki, kj) += gv * x.at(b, grp * cin_g + ci, iy, ix);
                g.dx.at(b, grp * cin_g + ci, iy, ix) += gv * w.at(co, ci, ki, kj);
              }
            }
          }
        }
      }
    }
  }
  return g;
}

Tensor resize_bilinear_forward(const Tensor& x, int out_h, int out_w) {
  const int h = x.dim(2), w = x.dim(3);
  Tensor y({x.dim(0), x.dim(1), out_h, out_w});
  auto source = [](int o, int in, int out, int& i0, int& i1, double& lam) {
    double s = (o + 0.5) * static_cast<double>(in) / out - 0.5;
    if (s < 0) s = 0;
    i0 = std::min(static_cast<int>(std::floor(s)), in - 1);
    i1 = std::min(i0 + 1, in - 1);
    lam = s - i0;
  };
  for (int b = 0; b < x.dim(0); ++b) {
    for (int c = 0; c < x.dim(1); ++c) {
      for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
          if (h == out_h && w == out_w) {
            y.at(b, c, oy, ox) = x.at(b, c, oy, ox);
            continue;
          }
          int y0, y1, x0, x1;
          double ly, lx;
          source(oy, h, out_h, y0, y1, ly);
          source(ox, w, out_w, x0, x1, lx);
          y.at(b, c, oy, ox) = (1 - ly) * ((1 - lx) * x.at(b, c, y0, x0) + lx * x.at(b, c, y0, x1)) +
                               ly * ((1 - lx) * x.at(b, c, y1, x0) + lx * x.at(b, c, y1, x1));
        }
      }
    }
  }
  return y;
}

Tensor adaptive_avg_pool_forward(const Tensor& x, int out_h, int out_w) {
  const int h = x.dim(2), w = x.dim(3);
  Tensor y({x.dim(0), x.dim(1), out_h, out_w});
  for (int b = 0; b < x.dim(0); ++b) {
    for (int c = 0; c < x.dim(1); ++c) {
      for (int oy = 0; oy < out_h; ++oy) {
        const int y0 = static_cast<int>(std::floor(static_cast<double>(oy) * h / out_h));
        const int y1 = static_cast<int>(std::ceil(static_cast<double>(oy + 1) * h / out_h));
        for (int ox = 0; ox < out_w; ++ox) {
          const int x0 = static_cast<int>(std::floor(static_cast<double>(ox) * w / out_w));
          const int x1 = static_cast<int>(std::ceil(static_cast<double>(ox + 1) * w / out_w));
          double s = 0;
          for (int iy = y0; iy < y1; ++iy)
            for (int ix = x0; ix < x1; ++ix) s += x.at(b, c, iy, ix);
          y.at(b, c, oy, ox) = s / ((y1 - y0) * (x1 - x0));
        }
      }
    }
  }
  return y;
}

Tensor bmm(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  const bool ba = a.rank() == 3, bb = b.rank() == 3;
  const int batch = ba ? a.dim(0) : (bb ? b.dim(0) : 1);
  const int ar = a.dim(-2), ac = a.dim(-1), br = b.dim(-2), bc = b.dim(-1);
  const int m = trans_a ? ac : ar, k = trans_a ? ar : ac, n = trans_b ? br : bc;
  Tensor y((ba || bb) ? Shape{batch, m, n} : Shape{m, n});
  for (int i = 0; i < batch; ++i) {
    const double* pa = a.data() + (ba ? static_cast<std::size_t>(i) * ar * ac : 0);
    const double* pb = b.data() + (bb ? static_cast<std::size_t>(i) * br * bc : 0);
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < n; ++c) {
        double s = 0;
        for (int t = 0; t < k; ++t) {
          const double av = trans_a ? pa[t * ac + r] : pa[r * ac + t];
          const double bv = trans_b ? pb[c * bc + t] : pb[t * bc + c];
          s += av * bv;
        }
        y[static_cast<std::size_t>(i) * m * n + r * n + c] = s;
      }
    }
  }
  return y;
}

}  // namespace forgerecon::kernels::reference
