#include "forgerecon/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "forgerecon/errors.hpp"

namespace forgerecon::kernels {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<RowMat>;
using ConstMap = Eigen::Map<const RowMat>;

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int thread_id() {
#ifdef _OPENMP
  return omp_get_thread_num();
#else
  return 0;
#endif
}

struct ConvDims {
  int batch, cin, h, w;
  int cout, cin_g, kh, kw;
  int oh, ow;
  int groups, cout_g;
  bool pointwise;  // 1x1, stride 1, no padding: the input is its own column matrix
  bool depthwise;  // one input and one output channel per group
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, const ConvGeometry& g) {
  if (x.rank() != 4 || w.rank() != 4) {
    throw ShapeError("conv2d expects rank-4 input and weight, got " + shape_str(x.shape()) + " and " +
                     shape_str(w.shape()));
  }
  ConvDims d{};
  d.batch = x.dim(0);
  d.cin = x.dim(1);
  d.h = x.dim(2);
  d.w = x.dim(3);
  d.cout = w.dim(0);
  d.cin_g = w.dim(1);
  d.kh = w.dim(2);
  d.kw = w.dim(3);
  d.groups = g.groups;
  if (g.groups < 1 || d.cin % g.groups != 0 || d.cout % g.groups != 0 || d.cin / g.groups != d.cin_g) {
    throw ConfigError("conv2d channel mismatch: input " + shape_str(x.shape()) + ", weight " +
                      shape_str(w.shape()) + ", groups " + std::to_string(g.groups));
  }
  if (g.stride < 1) throw ConfigError("conv2d stride must be >= 1");
  d.cout_g = d.cout / g.groups;
  d.oh = conv_out_size(d.h, d.kh, g.stride, g.pad);
  d.ow = conv_out_size(d.w, d.kw, g.stride, g.pad);
  if (d.oh <= 0 || d.ow <= 0) {
    throw ShapeError("conv2d output would be empty for input " + shape_str(x.shape()));
  }
  d.pointwise = d.kh == 1 && d.kw == 1 && g.stride == 1 && g.pad == 0;
  d.depthwise = d.cin_g == 1 && d.cout_g == 1 && d.groups > 1;
  return d;
}

// Columns for channels [c0, c0 + nc) of one image: (nc*kh*kw) x (oh*ow).
void im2col(const double* img, const ConvDims& d, const ConvGeometry& g, int c0, int nc, double* col) {
  const int ohw = d.oh * d.ow;
  for (int c = 0; c < nc; ++c) {
    const double* plane = img + static_cast<std::size_t>(c0 + c) * d.h * d.w;
    for (int ki = 0; ki < d.kh; ++ki) {
      for (int kj = 0; kj < d.kw; ++kj) {
        double* row = col + static_cast<std::size_t>((c * d.kh + ki) * d.kw + kj) * ohw;
        for (int oy = 0; oy < d.oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ki;
          double* out = row + oy * d.ow;
          if (iy < 0 || iy >= d.h) {
            std::fill(out, out + d.ow, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(iy) * d.w;
          for (int ox = 0; ox < d.ow; ++ox) {
            const int ix = ox * g.stride - g.pad + kj;
            out[ox] = (ix >= 0 && ix < d.w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, const ConvDims& d, const ConvGeometry& g, int c0, int nc, double* img) {
  const int ohw = d.oh * d.ow;
  for (int c = 0; c < nc; ++c) {
    double* plane = img + static_cast<std::size_t>(c0 + c) * d.h * d.w;
    for (int ki = 0; ki < d.kh; ++ki) {
      for (int kj = 0; kj < d.kw; ++kj) {
        const double* row = col + static_cast<std::size_t>((c * d.kh + ki) * d.kw + kj) * ohw;
        for (int oy = 0; oy < d.oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ki;
          if (iy < 0 || iy >= d.h) continue;
          double* dst = plane + static_cast<std::size_t>(iy) * d.w;
          const double* src = row + oy * d.ow;
          for (int ox = 0; ox < d.ow; ++ox) {
            const int ix = ox * g.stride - g.pad + kj;
            if (ix >= 0 && ix < d.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

void depthwise_forward_image(const double* img, const double* w, const double* bias, const ConvDims& d,
                             const ConvGeometry& g, double* out) {
  for (int c = 0; c < d.cout; ++c) {
    const double* plane = img + static_cast<std::size_t>(c) * d.h * d.w;
    const double* k = w + static_cast<std::size_t>(c) * d.kh * d.kw;
    double* dst = out + static_cast<std::size_t>(c) * d.oh * d.ow;
    const double b = bias ? bias[c] : 0.0;
    for (int oy = 0; oy < d.oh; ++oy) {
      for (int ox = 0; ox < d.ow; ++ox) {
        double acc = 0.0;
        for (int ki = 0; ki < d.kh; ++ki) {
          const int iy = oy * g.stride - g.pad + ki;
          if (iy < 0 || iy >= d.h) continue;
          for (int kj = 0; kj < d.kw; ++kj) {
            const int ix = ox * g.stride - g.pad + kj;
            if (ix < 0 || ix >= d.w) continue;
            acc += k[ki * d.kw + kj] * plane[static_cast<std::size_t>(iy) * d.w + ix];
          }
        }
        dst[oy * d.ow + ox] = acc + b;
      }
    }
  }
}

}  // namespace

int conv_out_size(int in, int kernel, int stride, int pad) { return (in + 2 * pad - kernel) / stride + 1; }

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, const ConvGeometry& geom) {
  const ConvDims d = conv_dims(x, w, geom);
  if (bias && (bias->rank() != 1 || bias->dim(0) != d.cout)) {
    throw ConfigError("conv2d bias shape " + shape_str(bias->shape()) + " does not match " +
                      std::to_string(d.cout) + " output channels");
  }
  Tensor y({d.batch, d.cout, d.oh, d.ow});
  const std::size_t in_stride = static_cast<std::size_t>(d.cin) * d.h * d.w;
  const std::size_t out_stride = static_cast<std::size_t>(d.cout) * d.oh * d.ow;
  const int ohw = d.oh * d.ow;
  const int k_g = d.cin_g * d.kh * d.kw;

#pragma omp parallel
  {
    AlignedBuffer col;
    if (!d.pointwise && !d.depthwise) col.resize(static_cast<std::size_t>(k_g) * ohw);
#pragma omp for schedule(static)
    for (int b = 0; b < d.batch; ++b) {
      const double* img = x.data() + b * in_stride;
      double* out = y.data() + b * out_stride;
      if (d.depthwise) {
        depthwise_forward_image(img, w.data(), bias ? bias->data() : nullptr, d, geom, out);
        continue;
      }
      for (int grp = 0; grp < d.groups; ++grp) {
        const double* cols = img + static_cast<std::size_t>(grp) * d.cin_g * d.h * d.w;
        if (!d.pointwise) {
          im2col(img, d, geom, grp * d.cin_g, d.cin_g, col.data());
          cols = col.data();
        }
        ConstMap wm(w.data() + static_cast<std::size_t>(grp) * d.cout_g * k_g, d.cout_g, k_g);
        ConstMap cm(cols, k_g, ohw);
        Map ym(out + static_cast<std::size_t>(grp) * d.cout_g * ohw, d.cout_g, ohw);
        ym.noalias() = wm * cm;
      }
      if (bias) {
        for (int c = 0; c < d.cout; ++c) {
          double* row = out + static_cast<std::size_t>(c) * ohw;
          const double bv = (*bias)[c];
          for (int i = 0; i < ohw; ++i) row[i] += bv;
        }
      }
    }
  }
  return y;
}

ConvGrads conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, const ConvGeometry& geom,
                          bool need_dx, bool need_dw, bool need_db) {
  const ConvDims d = conv_dims(x, w, geom);
  if (dy.shape() != Shape{d.batch, d.cout, d.oh, d.ow}) {
    throw ShapeError("conv2d_backward upstream gradient " + shape_str(dy.shape()) + " does not match output " +
                     shape_str({d.batch, d.cout, d.oh, d.ow}));
  }
  ConvGrads grads;
  const std::size_t in_stride = static_cast<std::size_t>(d.cin) * d.h * d.w;
  const std::size_t out_stride = static_cast<std::size_t>(d.cout) * d.oh * d.ow;
  const int ohw = d.oh * d.ow;
  const int k_g = d.cin_g * d.kh * d.kw;

  if (need_db) {
    grads.db = Tensor({d.cout});
    for (int b = 0; b < d.batch; ++b) {
      for (int c = 0; c < d.cout; ++c) {
        const double* row = dy.data() + b * out_stride + static_cast<std::size_t>(c) * ohw;
        double s = 0.0;
        for (int i = 0; i < ohw; ++i) s += row[i];
        grads.db[c] += s;
      }
    }
  }
  if (need_dx) grads.dx = Tensor(x.shape());

  // Per-thread weight-gradient partials are reduced in thread order so the
  // result is reproducible for a fixed thread count.
  const int nthreads = thread_count();
  std::vector<Tensor> dw_partial(need_dw ? nthreads : 0);

#pragma omp parallel
  {
    AlignedBuffer col;
    AlignedBuffer dcol;
    if (!d.depthwise) {
      col.resize(static_cast<std::size_t>(k_g) * ohw);
      dcol.resize(static_cast<std::size_t>(k_g) * ohw);
    }
    Tensor dw_local;
    if (need_dw) dw_local = Tensor(w.shape());
#pragma omp for schedule(static)
    for (int b = 0; b < d.batch; ++b) {
      const double* img = x.data() + b * in_stride;
      const double* gout = dy.data() + b * out_stride;
      if (d.depthwise) {
        double* gin = need_dx ? grads.dx.data() + b * in_stride : nullptr;
        for (int c = 0; c < d.cout; ++c) {
          const double* plane = img + static_cast<std::size_t>(c) * d.h * d.w;
          const double* k = w.data() + static_cast<std::size_t>(c) * d.kh * d.kw;
          double* dk = need_dw ? dw_local.data() + static_cast<std::size_t>(c) * d.kh * d.kw : nullptr;
          double* gplane = gin ? gin + static_cast<std::size_t>(c) * d.h * d.w : nullptr;
          const double* grow = gout + static_cast<std::size_t>(c) * ohw;
          for (int oy = 0; oy < d.oh; ++oy) {
            for (int ox = 0; ox < d.ow; ++ox) {
              const double gv = grow[oy * d.ow + ox];
              for (int ki = 0; ki < d.kh; ++ki) {
                const int iy = oy * geom.stride - geom.pad + ki;
                if (iy < 0 || iy >= d.h) continue;
                for (int kj = 0; kj < d.kw; ++kj) {
                  const int ix = ox * geom.stride - geom.pad + kj;
                  if (ix < 0 || ix >= d.w) continue;
                  const std::size_t p = static_cast<std::size_t>(iy) * d.w + ix;
                  if (dk) dk[ki * d.kw + kj] += gv * plane[p];
                  if (gplane) gplane[p] += gv * k[ki * d.kw + kj];
                }
              }
            }
          }
        }
        continue;
      }
      for (int grp = 0; grp < d.groups; ++grp) {
        ConstMap gm(gout + static_cast<std::size_t>(grp) * d.cout_g * ohw, d.cout_g, ohw);
        ConstMap wm(w.data() + static_cast<std::size_t>(grp) * d.cout_g * k_g, d.cout_g, k_g);
        if (need_dw) {
          const double* cols = img + static_cast<std::size_t>(grp) * d.cin_g * d.h * d.w;
          if (!d.pointwise) {
            im2col(img, d, geom, grp * d.cin_g, d.cin_g, col.data());
            cols = col.data();
          }
          ConstMap cm(cols, k_g, ohw);
          Map dwm(dw_local.data() + static_cast<std::size_t>(grp) * d.cout_g * k_g, d.cout_g, k_g);
          dwm.noalias() += gm * cm.transpose();
        }
        if (need_dx) {
          double* gin = grads.dx.data() + b * in_stride;
          if (d.pointwise) {
            Map dxm(gin + static_cast<std::size_t>(grp) * d.cin_g * d.h * d.w, k_g, ohw);
            dxm.noalias() += wm.transpose() * gm;
          } else {
            Map dcm(dcol.data(), k_g, ohw);
            dcm.noalias() = wm.transpose() * gm;
            col2im_add(dcol.data(), d, geom, grp * d.cin_g, d.cin_g, gin);
          }
        }
      }
    }
    if (need_dw) dw_partial[thread_id()] = std::move(dw_local);
  }

  if (need_dw) {
    grads.dw = Tensor(w.shape());
    for (const Tensor& part : dw_partial) {
      if (!part.empty()) grads.dw += part;
    }
  }
  return grads;
}

namespace {

struct AxisInterp {
  std::vector<int> i0, i1;
  std::vector<double> l0, l1;
};

AxisInterp axis_interp(int in, int out) {
  AxisInterp a;
  a.i0.resize(out);
  a.i1.resize(out);
  a.l0.resize(out);
  a.l1.resize(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    int i0 = static_cast<int>(src);
    if (i0 > in - 1) i0 = in - 1;
    const int i1 = i0 < in - 1 ? i0 + 1 : i0;
    const double lam = src - i0;
    a.i0[o] = i0;
    a.i1[o] = i1;
    a.l1[o] = lam;
    a.l0[o] = 1.0 - lam;
  }
  return a;
}

void check_rank4(const Tensor& t, const char* op) {
  if (t.rank() != 4) throw ShapeError(std::string(op) + " expects a rank-4 tensor, got " + shape_str(t.shape()));
}

}  // namespace

Tensor resize_bilinear_forward(const Tensor& x, int out_h, int out_w) {
  check_rank4(x, "resize_bilinear");
  const int n = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h == 0 || w == 0 || out_h <= 0 || out_w <= 0) throw EmptyInputError("resize_bilinear on empty extent");
  Tensor y({x.dim(0), x.dim(1), out_h, out_w});
  if (h == out_h && w == out_w) {
    y.storage() = x.storage();
    return y;
  }
  const AxisInterp ay = axis_interp(h, out_h), ax = axis_interp(w, out_w);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < n; ++p) {
    const double* src = x.data() + static_cast<std::size_t>(p) * h * w;
    double* dst = y.data() + static_cast<std::size_t>(p) * out_h * out_w;
    for (int oy = 0; oy < out_h; ++oy) {
      const double* r0 = src + static_cast<std::size_t>(ay.i0[oy]) * w;
      const double* r1 = src + static_cast<std::size_t>(ay.i1[oy]) * w;
      for (int ox = 0; ox < out_w; ++ox) {
        const double top = ax.l0[ox] * r0[ax.i0[ox]] + ax.l1[ox] * r0[ax.i1[ox]];
        const double bot = ax.l0[ox] * r1[ax.i0[ox]] + ax.l1[ox] * r1[ax.i1[ox]];
        dst[oy * out_w + ox] = ay.l0[oy] * top + ay.l1[oy] * bot;
      }
    }
  }
  return y;
}

Tensor resize_bilinear_backward(const Tensor& dy, int in_h, int in_w) {
  check_rank4(dy, "resize_bilinear_backward");
  const int n = dy.dim(0) * dy.dim(1), out_h = dy.dim(2), out_w = dy.dim(3);
  Tensor dx({dy.dim(0), dy.dim(1), in_h, in_w});
  if (in_h == out_h && in_w == out_w) {
    dx.storage() = dy.storage();
    return dx;
  }
  const AxisInterp ay = axis_interp(in_h, out_h), ax = axis_interp(in_w, out_w);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < n; ++p) {
    const double* g = dy.data() + static_cast<std::size_t>(p) * out_h * out_w;
    double* dst = dx.data() + static_cast<std::size_t>(p) * in_h * in_w;
    for (int oy = 0; oy < out_h; ++oy) {
      double* r0 = dst + static_cast<std::size_t>(ay.i0[oy]) * in_w;
      double* r1 = dst + static_cast<std::size_t>(ay.i1[oy]) * in_w;
      for (int ox = 0; ox < out_w; ++ox) {
        const double gv = g[oy * out_w + ox];
        const double gt = ay.l0[oy] * gv, gb = ay.l1[oy] * gv;
        r0[ax.i0[ox]] += ax.l0[ox] * gt;
        r0[ax.i1[ox]] += ax.l1[ox] * gt;
        r1[ax.i0[ox]] += ax.l0[ox] * gb;
        r1[ax.i1[ox]] += ax.l1[ox] * gb;
      }
    }
  }
  return dx;
}

namespace {

inline int bin_start(int i, int in, int out) { return (i * in) / out; }
inline int bin_end(int i, int in, int out) { return ((i + 1) * in + out - 1) / out; }

}  // namespace

Tensor adaptive_avg_pool_forward(const Tensor& x, int out_h, int out_w) {
  check_rank4(x, "adaptive_avg_pool");
  const int n = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h == 0 || w == 0 || out_h <= 0 || out_w <= 0) throw EmptyInputError("adaptive_avg_pool on empty extent");
  Tensor y({x.dim(0), x.dim(1), out_h, out_w});
#pragma omp parallel for schedule(static)
  for (int p = 0; p < n; ++p) {
    const double* src = x.data() + static_cast<std::size_t>(p) * h * w;
    double* dst = y.data() + static_cast<std::size_t>(p) * out_h * out_w;
    for (int oy = 0; oy < out_h; ++oy) {
      const int y0 = bin_start(oy, h, out_h), y1 = bin_end(oy, h, out_h);
      for (int ox = 0; ox < out_w; ++ox) {
        const int x0 = bin_start(ox, w, out_w), x1 = bin_end(ox, w, out_w);
        double s = 0.0;
        for (int iy = y0; iy < y1; ++iy)
          for (int ix = x0; ix < x1; ++ix) s += src[static_cast<std::size_t>(iy) * w + ix];
        dst[oy * out_w + ox] = s / static_cast<double>((y1 - y0) * (x1 - x0));
      }
    }
  }
  return y;
}

Tensor adaptive_avg_pool_backward(const Tensor& dy, int in_h, int in_w) {
  check_rank4(dy, "adaptive_avg_pool_backward");
  const int n = dy.dim(0) * dy.dim(1), out_h = dy.dim(2), out_w = dy.dim(3);
  Tensor dx({dy.dim(0), dy.dim(1), in_h, in_w});
#pragma omp parallel for schedule(static)
  for (int p = 0; p < n; ++p) {
    const double* g = dy.data() + static_cast<std::size_t>(p) * out_h * out_w;
    double* dst = dx.data() + static_cast<std::size_t>(p) * in_h * in_w;
    for (int oy = 0; oy < out_h; ++oy) {
      const int y0 = bin_start(oy, in_h, out_h), y1 = bin_end(oy, in_h, out_h);
      for (int ox = 0; ox < out_w; ++ox) {
        const int x0 = bin_start(ox, in_w, out_w), x1 = bin_end(ox, in_w, out_w);
        const double gv = g[oy * out_w + ox] / static_cast<double>((y1 - y0) * (x1 - x0));
        for (int iy = y0; iy < y1; ++iy)
          for (int ix = x0; ix < x1; ++ix) dst[static_cast<std::size_t>(iy) * in_w + ix] += gv;
      }
    }
  }
  return dx;
}

namespace {

struct MatOperand {
  int batch;  // 0 when broadcast
  int rows, cols;
};

MatOperand mat_operand(const Tensor& t, const char* name) {
  if (t.rank() == 3) return {t.dim(0), t.dim(1), t.dim(2)};
  if (t.rank() == 2) return {0, t.dim(0), t.dim(1)};
  throw ShapeError(std::string("bmm operand ") + name + " must be rank 2 or 3, got " + shape_str(t.shape()));
}

}  // namespace

Tensor bmm(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  const MatOperand oa = mat_operand(a, "a"), ob = mat_operand(b, "b");
  const int m = trans_a ? oa.cols : oa.rows;
  const int ka = trans_a ? oa.rows : oa.cols;
  const int kb = trans_b ? ob.cols : ob.rows;
  const int n = trans_b ? ob.rows : ob.cols;
  if (ka != kb) {
    throw ShapeError("bmm inner dimension mismatch: " + shape_str(a.shape()) + (trans_a ? "^T" : "") + " x " +
                     shape_str(b.shape()) + (trans_b ? "^T" : ""));
  }
  if (oa.batch && ob.batch && oa.batch != ob.batch) {
    throw ShapeError("bmm batch mismatch: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const int batch = std::max({oa.batch, ob.batch, 1});
  const bool batched = oa.batch || ob.batch;
  Tensor y(batched ? Shape{batch, m, n} : Shape{m, n});
  const std::size_t sa = oa.batch ? static_cast<std::size_t>(oa.rows) * oa.cols : 0;
  const std::size_t sb = ob.batch ? static_cast<std::size_t>(ob.rows) * ob.cols : 0;
  const std::size_t sy = static_cast<std::size_t>(m) * n;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < batch; ++i) {
    ConstMap am(a.data() + i * sa, oa.rows, oa.cols);
    ConstMap bm(b.data() + i * sb, ob.rows, ob.cols);
    Map ym(y.data() + i * sy, m, n);
    if (trans_a && trans_b) {
      ym.noalias() = am.transpose() * bm.transpose();
    } else if (trans_a) {
      ym.noalias() = am.transpose() * bm;
    } else if (trans_b) {
      ym.noalias() = am * bm.transpose();
    } else {
      ym.noalias() = am * bm;
    }
  }
  return y;
}

}  // namespace forgerecon::kernels
