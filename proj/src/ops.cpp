#include "forgerecon/ops.hpp"

#include <algorithm>
#include <cmath>

#include "forgerecon/errors.hpp"

namespace forgerecon::ag {

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

// Elementwise unary op: forward value f(x), derivative df(x, y).
template <typename F, typename DF>
Var unary(const Var& x, F f, DF df) {
  const Tensor& xv = x.value();
  Tensor y(xv.shape());
  const std::size_t n = xv.size();
  for (std::size_t i = 0; i < n; ++i) y[i] = f(xv[i]);
  return make_result(std::move(y), {x}, [df](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    Tensor g(p.value.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = self.grad[i] * df(p.value[i], self.value[i]);
    p.accumulate_grad(g);
  });
}

// Splits shape around `axis` into (outer, n, inner).
void axis_split(const Shape& shape, int axis, std::size_t& outer, std::size_t& n, std::size_t& inner) {
  const int rank = static_cast<int>(shape.size());
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) throw ShapeError("axis out of range for shape " + shape_str(shape));
  outer = 1;
  inner = 1;
  for (int i = 0; i < axis; ++i) outer *= shape[i];
  for (int i = axis + 1; i < rank; ++i) inner *= shape[i];
  n = shape[axis];
}

}  // namespace

Var conv2d(const Var& x, const Var& weight, const Var& bias, const ConvGeometry& geom) {
  const Tensor* b = bias.defined() ? &bias.value() : nullptr;
  Tensor y = kernels::conv2d_forward(x.value(), weight.value(), b, geom);
  std::vector<Var> parents{x, weight};
  if (bias.defined()) parents.push_back(bias);
  return make_result(std::move(y), parents, [geom](Node& self) {
    Node& px = parent(self, 0);
    Node& pw = parent(self, 1);
    Node* pb = self.parents.size() > 2 ? self.parents[2].get() : nullptr;
    const bool need_db = pb && pb->requires_grad;
    kernels::ConvGrads g =
        kernels::conv2d_backward(px.value, pw.value, self.grad, geom, px.requires_grad, pw.requires_grad, need_db);
    if (px.requires_grad) px.accumulate_grad(g.dx);
    if (pw.requires_grad) pw.accumulate_grad(g.dw);
    if (need_db) pb->accumulate_grad(g.db);
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor y = a.value();
  y += b.value();
  return make_result(std::move(y), {a, b}, [](Node& self) {
    for (std::size_t i = 0; i < 2; ++i) {
      if (parent(self, i).requires_grad) parent(self, i).accumulate_grad(self.grad);
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= b.value()[i];
  return make_result(std::move(y), {a, b}, [](Node& self) {
    if (parent(self, 0).requires_grad) parent(self, 0).accumulate_grad(self.grad);
    if (parent(self, 1).requires_grad) {
      Tensor g = self.grad;
      for (double& v : g.values()) v = -v;
      parent(self, 1).accumulate_grad(g);
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= b.value()[i];
  return make_result(std::move(y), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) {
      Tensor g = self.grad;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= pb.value[i];
      pa.accumulate_grad(g);
    }
    if (pb.requires_grad) {
      Tensor g = self.grad;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= pa.value[i];
      pb.accumulate_grad(g);
    }
  });
}

Var scale(const Var& a, double factor) {
  return unary(a, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Var add_scalar(const Var& a, double value) {
  return unary(a, [value](double v) { return v + value; }, [](double, double) { return 1.0; });
}

Var relu(const Var& x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var abs(const Var& x) {
  return unary(
      x, [](double v) { return std::abs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Var clamp(const Var& x, double lo, double hi) {
  return unary(
      x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v, double) { return (v > lo && v < hi) ? 1.0 : 0.0; });
}

Var softmax(const Var& x, int axis) {
  std::size_t outer, n, inner;
  axis_split(x.shape(), axis, outer, n, inner);
  const Tensor& xv = x.value();
  Tensor y(xv.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      double m = -INFINITY;
      for (std::size_t k = 0; k < n; ++k) m = std::max(m, xv[base + k * inner]);
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double e = std::exp(xv[base + k * inner] - m);
        y[base + k * inner] = e;
        s += e;
      }
      for (std::size_t k = 0; k < n; ++k) y[base + k * inner] /= s;
    }
  }
  return make_result(std::move(y), {x}, [outer, n, inner](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    Tensor g(self.value.shape());
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * n * inner + in;
        double dot = 0.0;
        for (std::size_t k = 0; k < n; ++k) dot += self.grad[base + k * inner] * self.value[base + k * inner];
        for (std::size_t k = 0; k < n; ++k) {
          const std::size_t i = base + k * inner;
          g[i] = self.value[i] * (self.grad[i] - dot);
        }
      }
    }
    p.accumulate_grad(g);
  });
}

Var sum_normalize(const Var& x, int axis, double eps) {
  std::size_t outer, n, inner;
  axis_split(x.shape(), axis, outer, n, inner);
  const Tensor& xv = x.value();
  Tensor y(xv.shape());
  std::vector<double> denom(outer * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      double s = eps;
      for (std::size_t k = 0; k < n; ++k) s += xv[base + k * inner];
      denom[o * inner + in] = s;
      for (std::size_t k = 0; k < n; ++k) y[base + k * inner] = xv[base + k * inner] / s;
    }
  }
  return make_result(std::move(y), {x}, [outer, n, inner, denom = std::move(denom)](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    Tensor g(self.value.shape());
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * n * inner + in;
        const double s = denom[o * inner + in];
        double dot = 0.0;
        for (std::size_t k = 0; k < n; ++k) dot += self.grad[base + k * inner] * self.value[base + k * inner];
        for (std::size_t k = 0; k < n; ++k) {
          const std::size_t i = base + k * inner;
          g[i] = (self.grad[i] - dot) / s;
        }
      }
    }
    p.accumulate_grad(g);
  });
}

Var resize_bilinear(const Var& x, int out_h, int out_w) {
  const int in_h = x.dim(2), in_w = x.dim(3);
  Tensor y = kernels::resize_bilinear_forward(x.value(), out_h, out_w);
  return make_result(std::move(y), {x}, [in_h, in_w](Node& self) {
    Node& p = parent(self, 0);
    if (p.requires_grad) p.accumulate_grad(kernels::resize_bilinear_backward(self.grad, in_h, in_w));
  });
}

Var adaptive_avg_pool(const Var& x, int out_h, int out_w) {
  const int in_h = x.dim(2), in_w = x.dim(3);
  Tensor y = kernels::adaptive_avg_pool_forward(x.value(), out_h, out_w);
  return make_result(std::move(y), {x}, [in_h, in_w](Node& self) {
    Node& p = parent(self, 0);
    if (p.requires_grad) p.accumulate_grad(kernels::adaptive_avg_pool_backward(self.grad, in_h, in_w));
  });
}

Var broadcast_cells(const Var& pooled, int out_h, int out_w) {
  const Tensor& pv = pooled.value();
  if (pv.rank() != 4) throw ShapeError("broadcast_cells expects rank 4, got " + shape_str(pv.shape()));
  const int planes = pv.dim(0) * pv.dim(1), ph = pv.dim(2), pw = pv.dim(3);
  Tensor y({pv.dim(0), pv.dim(1), out_h, out_w});
  auto cell = [](int i, int out, int cells) { return static_cast<int>((static_cast<long>(i) * cells) / out); };
  for (int p = 0; p < planes; ++p) {
    for (int yy = 0; yy < out_h; ++yy) {
      const int cy = cell(yy, out_h, ph);
      for (int xx = 0; xx < out_w; ++xx) {
        y[(static_cast<std::size_t>(p) * out_h + yy) * out_w + xx] =
            pv[(static_cast<std::size_t>(p) * ph + cy) * pw + cell(xx, out_w, pw)];
      }
    }
  }
  return make_result(std::move(y), {pooled}, [planes, ph, pw, out_h, out_w, cell](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    Tensor g(p.value.shape());
    for (int q = 0; q < planes; ++q) {
      for (int yy = 0; yy < out_h; ++yy) {
        const int cy = cell(yy, out_h, ph);
        for (int xx = 0; xx < out_w; ++xx) {
          g[(static_cast<std::size_t>(q) * ph + cy) * pw + cell(xx, out_w, pw)] +=
              self.grad[(static_cast<std::size_t>(q) * out_h + yy) * out_w + xx];
        }
      }
    }
    p.accumulate_grad(g);
  });
}

Var concat_channels(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels needs at least one input");
  const Shape& s0 = parts[0].shape();
  if (s0.size() != 4) throw ShapeError("concat_channels expects rank-4 inputs");
  int channels = 0;
  std::vector<int> widths;
  for (const Var& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != 4 || s[0] != s0[0] || s[2] != s0[2] || s[3] != s0[3]) {
      throw ShapeError("concat_channels shape mismatch " + shape_str(s0) + " vs " + shape_str(s));
    }
    channels += s[1];
    widths.push_back(s[1]);
  }
  const int batch = s0[0];
  const std::size_t plane = static_cast<std::size_t>(s0[2]) * s0[3];
  Tensor y({batch, channels, s0[2], s0[3]});
  for (int b = 0; b < batch; ++b) {
    std::size_t offset = static_cast<std::size_t>(b) * channels * plane;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const std::size_t len = widths[k] * plane;
      const double* src = parts[k].value().data() + b * len;
      std::copy(src, src + len, y.data() + offset);
      offset += len;
    }
  }
  return make_result(std::move(y), parts, [widths, batch, channels, plane](Node& self) {
    int c0 = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      Node& p = parent(self, k);
      if (p.requires_grad) {
        Tensor g(p.value.shape());
        const std::size_t len = widths[k] * plane;
        for (int b = 0; b < batch; ++b) {
          const double* src = self.grad.data() + (static_cast<std::size_t>(b) * channels + c0) * plane;
          std::copy(src, src + len, g.data() + b * len);
        }
        p.accumulate_grad(g);
      }
      c0 += widths[k];
    }
  });
}

Var reshape(const Var& x, Shape shape) {
  Tensor y = x.value().reshaped(std::move(shape));
  return make_result(std::move(y), {x}, [](Node& self) {
    Node& p = parent(self, 0);
    if (p.requires_grad) p.accumulate_grad(self.grad.reshaped(p.value.shape()));
  });
}

Var bmm(const Var& a, const Var& b, bool trans_a, bool trans_b) {
  Tensor y = kernels::bmm(a.value(), b.value(), trans_a, trans_b);
  return make_result(std::move(y), {a, b}, [trans_a, trans_b](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    const Tensor& g = self.grad;
    // Y = op(A) op(B); dop(A) = G op(B)^T, dop(B) = op(A)^T G.
    auto reduce_broadcast = [&](Tensor grad, const Tensor& like) {
      if (like.rank() == 2 && grad.rank() == 3) {
        Tensor r(like.shape());
        const std::size_t n = r.size();
        for (int i = 0; i < grad.dim(0); ++i)
          for (std::size_t k = 0; k < n; ++k) r[k] += grad[i * n + k];
        return r;
      }
      return grad;
    };
    if (pa.requires_grad) {
      Tensor ga = trans_a ? kernels::bmm(pb.value, g, trans_b, true) : kernels::bmm(g, pb.value, false, !trans_b);
      pa.accumulate_grad(reduce_broadcast(std::move(ga), pa.value));
    }
    if (pb.requires_grad) {
      Tensor gb = trans_b ? kernels::bmm(g, pa.value, true, trans_a) : kernels::bmm(pa.value, g, !trans_a, false);
      pb.accumulate_grad(reduce_broadcast(std::move(gb), pb.value));
    }
  });
}

Var global_avg_pool(const Var& x) {
  const Tensor& xv = x.value();
  if (xv.rank() != 4) throw ShapeError("global_avg_pool expects rank 4, got " + shape_str(xv.shape()));
  const int b = xv.dim(0), c = xv.dim(1);
  const std::size_t plane = static_cast<std::size_t>(xv.dim(2)) * xv.dim(3);
  if (plane == 0) throw EmptyInputError("global_avg_pool on empty spatial extent");
  Tensor y({b, c});
  for (std::size_t p = 0; p < static_cast<std::size_t>(b) * c; ++p) {
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += xv[p * plane + i];
    y[p] = s / static_cast<double>(plane);
  }
  return make_result(std::move(y), {x}, [plane](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    Tensor g(p.value.shape());
    for (std::size_t q = 0; q < self.grad.size(); ++q) {
      const double gv = self.grad[q] / static_cast<double>(plane);
      for (std::size_t i = 0; i < plane; ++i) g[q * plane + i] = gv;
    }
    p.accumulate_grad(g);
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  if (x.value().rank() != 2 || weight.value().rank() != 2 || x.dim(1) != weight.dim(1)) {
    throw ConfigError("linear: input " + shape_str(x.shape()) + " incompatible with weight " +
                      shape_str(weight.shape()));
  }
  Var y = bmm(x, weight, false, true);
  if (!bias.defined()) return y;
  const int batch = x.dim(0), out = weight.dim(0);
  if (bias.value().rank() != 1 || bias.dim(0) != out) throw ConfigError("linear: bias shape mismatch");
  Tensor yv = y.value();
  for (int b = 0; b < batch; ++b)
    for (int o = 0; o < out; ++o) yv[b * out + o] += bias.value()[o];
  return make_result(std::move(yv), {y, bias}, [batch, out](Node& self) {
    if (parent(self, 0).requires_grad) parent(self, 0).accumulate_grad(self.grad);
    Node& pb = parent(self, 1);
    if (pb.requires_grad) {
      Tensor g({out});
      for (int b = 0; b < batch; ++b)
        for (int o = 0; o < out; ++o) g[o] += self.grad[b * out + o];
      pb.accumulate_grad(g);
    }
  });
}

Var scale_channels(const Var& x, const Var& s) {
  const Tensor& xv = x.value();
  const Tensor& sv = s.value();
  if (xv.rank() != 4 || sv.rank() != 2 || sv.dim(0) != xv.dim(0) || sv.dim(1) != xv.dim(1)) {
    throw ShapeError("scale_channels: " + shape_str(xv.shape()) + " with scales " + shape_str(sv.shape()));
  }
  const std::size_t planes = sv.size();
  const std::size_t plane = static_cast<std::size_t>(xv.dim(2)) * xv.dim(3);
  Tensor y(xv.shape());
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t i = 0; i < plane; ++i) y[p * plane + i] = xv[p * plane + i] * sv[p];
  return make_result(std::move(y), {x, s}, [planes, plane](Node& self) {
    Node& px = parent(self, 0);
    Node& ps = parent(self, 1);
    if (px.requires_grad) {
      Tensor g(px.value.shape());
      for (std::size_t p = 0; p < planes; ++p)
        for (std::size_t i = 0; i < plane; ++i) g[p * plane + i] = self.grad[p * plane + i] * ps.value[p];
      px.accumulate_grad(g);
    }
    if (ps.requires_grad) {
      Tensor g(ps.value.shape());
      for (std::size_t p = 0; p < planes; ++p) {
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) acc += self.grad[p * plane + i] * px.value[p * plane + i];
        g[p] = acc;
      }
      ps.accumulate_grad(g);
    }
  });
}

Var channel_conv1d(const Var& x, const Var& kernel) {
  const Tensor& xv = x.value();
  const Tensor& kv = kernel.value();
  if (xv.rank() != 2 || kv.rank() != 1 || kv.size() % 2 == 0) {
    throw ConfigError("channel_conv1d: input " + shape_str(xv.shape()) + ", kernel " + shape_str(kv.shape()));
  }
  const int batch = xv.dim(0), c = xv.dim(1), k = kv.dim(0), half = k / 2;
  Tensor y(xv.shape());
  for (int b = 0; b < batch; ++b) {
    for (int i = 0; i < c; ++i) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t) {
        const int j = i + t - half;
        if (j >= 0 && j < c) acc += kv[t] * xv[b * c + j];
      }
      y[b * c + i] = acc;
    }
  }
  return make_result(std::move(y), {x, kernel}, [batch, c, k, half](Node& self) {
    Node& px = parent(self, 0);
    Node& pk = parent(self, 1);
    Tensor gx(px.value.shape());
    Tensor gk(pk.value.shape());
    for (int b = 0; b < batch; ++b) {
      for (int i = 0; i < c; ++i) {
        const double gv = self.grad[b * c + i];
        for (int t = 0; t < k; ++t) {
          const int j = i + t - half;
          if (j < 0 || j >= c) continue;
          gx[b * c + j] += gv * pk.value[t];
          gk[t] += gv * px.value[b * c + j];
        }
      }
    }
    if (px.requires_grad) px.accumulate_grad(gx);
    if (pk.requires_grad) pk.accumulate_grad(gk);
  });
}

Var group_norm(const Var& x, const Var& gamma, const Var& beta, int groups, double eps) {
  const Tensor& xv = x.value();
  if (xv.rank() != 4) throw ShapeError("group_norm expects rank 4, got " + shape_str(xv.shape()));
  const int b = xv.dim(0), c = xv.dim(1);
  if (groups <= 0 || c % groups != 0) {
    throw ConfigError("group_norm: " + std::to_string(c) + " channels not divisible by " + std::to_string(groups) +
                      " groups");
  }
  if (gamma.value().rank() != 1 || gamma.dim(0) != c || beta.value().rank() != 1 || beta.dim(0) != c) {
    throw ShapeError("group_norm: affine parameters must have shape (" + std::to_string(c) + ")");
  }
  const std::size_t plane = static_cast<std::size_t>(xv.dim(2)) * xv.dim(3);
  const int cg = c / groups;
  const std::size_t span = plane * cg;
  if (span == 0) throw EmptyInputError("group_norm on empty input");
  const std::size_t slices = static_cast<std::size_t>(b) * groups;

  Tensor xhat(xv.shape());
  std::vector<double> inv_std(slices);
  for (std::size_t s = 0; s < slices; ++s) {
    const double* in = xv.data() + s * span;
    double mean = 0.0;
    for (std::size_t i = 0; i < span; ++i) mean += in[i];
    mean /= static_cast<double>(span);
    double var = 0.0;
    for (std::size_t i = 0; i < span; ++i) var += (in[i] - mean) * (in[i] - mean);
    var /= static_cast<double>(span);
    inv_std[s] = 1.0 / std::sqrt(var + eps);
    double* out = xhat.data() + s * span;
    for (std::size_t i = 0; i < span; ++i) out[i] = (in[i] - mean) * inv_std[s];
  }
  Tensor y(xv.shape());
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  for (std::size_t q = 0; q < static_cast<std::size_t>(b) * c; ++q) {
    const int ch = static_cast<int>(q % c);
    for (std::size_t i = 0; i < plane; ++i) y[q * plane + i] = gv[ch] * xhat[q * plane + i] + bv[ch];
  }

  return make_result(std::move(y), {x, gamma, beta},
                     [xhat = std::move(xhat), inv_std = std::move(inv_std), b, c, plane, span, slices](Node& self) {
    Node& px = parent(self, 0);
    Node& pg = parent(self, 1);
    Node& pb = parent(self, 2);
    const Tensor& dy = self.grad;
    if (pg.requires_grad || pb.requires_grad) {
      Tensor dg({c}), db({c});
      for (std::size_t q = 0; q < static_cast<std::size_t>(b) * c; ++q) {
        const int ch = static_cast<int>(q % c);
        for (std::size_t i = 0; i < plane; ++i) {
          dg[ch] += dy[q * plane + i] * xhat[q * plane + i];
          db[ch] += dy[q * plane + i];
        }
      }
      if (pg.requires_grad) pg.accumulate_grad(dg);
      if (pb.requires_grad) pb.accumulate_grad(db);
    }
    if (!px.requires_grad) return;
    // dx = inv_std * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat)) per slice.
    Tensor dx(px.value.shape());
    const std::size_t per_channel = plane;
    for (std::size_t s = 0; s < slices; ++s) {
      const std::size_t base = s * span;
      double m1 = 0.0, m2 = 0.0;
      for (std::size_t i = 0; i < span; ++i) {
        const int ch = static_cast<int>(((base + i) / per_channel) % c);
        const double dxh = dy[base + i] * pg.value[ch];
        m1 += dxh;
        m2 += dxh * xhat[base + i];
      }
      m1 /= static_cast<double>(span);
      m2 /= static_cast<double>(span);
      for (std::size_t i = 0; i < span; ++i) {
        const int ch = static_cast<int>(((base + i) / per_channel) % c);
        const double dxh = dy[base + i] * pg.value[ch];
        dx[base + i] = inv_std[s] * (dxh - m1 - xhat[base + i] * m2);
      }
    }
    px.accumulate_grad(dx);
  });
}

Var sum(const Var& x) {
  Tensor y({1}, x.value().sum());
  return make_result(std::move(y), {x}, [](Node& self) {
    Node& p = parent(self, 0);
    if (p.requires_grad) p.accumulate_grad(Tensor(p.value.shape(), self.grad[0]));
  });
}

Var mean(const Var& x) {
  const double n = static_cast<double>(x.value().size());
  if (n == 0) throw EmptyInputError("mean of an empty tensor");
  return scale(sum(x), 1.0 / n);
}

Var detach(const Var& x) { return Var(x.value(), false); }

Var cross_entropy(const Var& logits, std::span<const int> labels) {
  const Tensor& lv = logits.value();
  if (lv.rank() != 2 || static_cast<std::size_t>(lv.dim(0)) != labels.size()) {
    throw ShapeError("cross_entropy: logits " + shape_str(lv.shape()) + " with " + std::to_string(labels.size()) +
                     " labels");
  }
  const int batch = lv.dim(0), k = lv.dim(1);
  if (batch == 0) throw EmptyInputError("cross_entropy on an empty batch");
  Tensor probs(lv.shape());
  double loss = 0.0;
  std::vector<int> lab(labels.begin(), labels.end());
  for (int b = 0; b < batch; ++b) {
    if (lab[b] < 0 || lab[b] >= k) throw ConfigError("cross_entropy: label out of range");
    double m = -INFINITY;
    for (int j = 0; j < k; ++j) m = std::max(m, lv[b * k + j]);
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += std::exp(lv[b * k + j] - m);
    const double lse = m + std::log(s);
    for (int j = 0; j < k; ++j) probs[b * k + j] = std::exp(lv[b * k + j] - lse);
    loss += lse - lv[b * k + lab[b]];
  }
  loss /= batch;
  return make_result(Tensor({1}, loss), {logits},
                     [probs = std::move(probs), lab = std::move(lab), batch, k](Node& self) {
                       Node& p = parent(self, 0);
                       if (!p.requires_grad) return;
                       Tensor g = probs;
                       for (int b = 0; b < batch; ++b) g[b * k + lab[b]] -= 1.0;
                       const double s = self.grad[0] / batch;
                       for (double& v : g.values()) v *= s;
                       p.accumulate_grad(g);
                     });
}

}  // namespace forgerecon::ag
