#include "forgerecon/visualize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "forgerecon/errors.hpp"
#include "forgerecon/kernels.hpp"

namespace forgerecon {

namespace {

void check_image(const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3) throw ShapeError("expected a (3, H, W) image, got " + shape_str(image.shape()));
}

Tensor as_batch(const Tensor& image) { return image.reshaped({1, image.dim(0), image.dim(1), image.dim(2)}); }

Tensor first_image(const Tensor& batch) { return batch.reshaped({batch.dim(1), batch.dim(2), batch.dim(3)}); }

// Rows of a 3x5 glyph, most significant of three bits on the left.
std::array<unsigned char, 5> glyph(char c) {
  switch (c) {
    case '0': return {7, 5, 5, 5, 7};
    case '1': return {2, 6, 2, 2, 7};
    case '2': return {7, 1, 7, 4, 7};
    case '3': return {7, 1, 7, 1, 7};
    case '4': return {5, 5, 7, 1, 1};
    case '5': return {7, 4, 7, 1, 7};
    case '6': return {7, 4, 7, 5, 7};
    case '7': return {7, 1, 1, 1, 1};
    case '8': return {7, 5, 7, 5, 7};
    case '9': return {7, 5, 7, 1, 7};
    case '.': return {0, 0, 0, 0, 2};
    case '-': return {0, 0, 7, 0, 0};
    case '+': return {0, 2, 7, 2, 0};
    case ':': return {0, 2, 0, 2, 0};
    case 'A': return {2, 5, 7, 5, 5};
    case 'B': return {6, 5, 6, 5, 6};
    case 'C': return {7, 4, 4, 4, 7};
    case 'D': return {6, 5, 5, 5, 6};
    case 'E': return {7, 4, 6, 4, 7};
    case 'F': return {7, 4, 6, 4, 4};
    case 'G': return {7, 4, 5, 5, 7};
    case 'H': return {5, 5, 7, 5, 5};
    case 'I': return {7, 2, 2, 2, 7};
    case 'J': return {1, 1, 1, 5, 7};
    case 'K': return {5, 5, 6, 5, 5};
    case 'L': return {4, 4, 4, 4, 7};
    case 'M': return {5, 7, 7, 5, 5};
    case 'N': return {6, 5, 5, 5, 5};
    case 'O': return {7, 5, 5, 5, 7};
    case 'P': return {7, 5, 7, 4, 4};
    case 'Q': return {7, 5, 5, 7, 1};
    case 'R': return {6, 5, 6, 5, 5};
    case 'S': return {7, 4, 7, 1, 7};
    case 'T': return {7, 2, 2, 2, 2};
    case 'U': return {5, 5, 5, 5, 7};
    case 'V': return {5, 5, 5, 5, 2};
    case 'W': return {5, 5, 7, 7, 5};
    case 'X': return {5, 5, 2, 5, 5};
    case 'Y': return {5, 5, 2, 2, 2};
    case 'Z': return {7, 1, 2, 4, 7};
    default: return {0, 0, 0, 0, 0};
  }
}

Tensor upscale_nearest(const Tensor& image, int factor) {
  if (factor == 1) return image;
  const int h = image.dim(1), w = image.dim(2);
  Tensor out({3, h * factor, w * factor});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h * factor; ++y)
      for (int x = 0; x < w * factor; ++x)
        out[(static_cast<std::size_t>(c) * h * factor + y) * w * factor + x] = image[(static_cast<std::size_t>(c) * h + y / factor) * w + x / factor];
  return out;
}

void paste(Tensor& canvas, const Tensor& panel, int x0, int y0) {
  const int ch = canvas.dim(1), cw = canvas.dim(2), h = panel.dim(1), w = panel.dim(2);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        canvas[(static_cast<std::size_t>(c) * ch + y0 + y) * cw + x0 + x] = panel[(static_cast<std::size_t>(c) * h + y) * w + x];
}

std::string range_text(double lo, double hi) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3f-%.3f", lo, hi);
  return buf;
}

}  // namespace

Tensor minmax_normalize(const Tensor& t, double& lo, double& hi) {
  if (t.empty()) throw EmptyInputError("minmax_normalize on an empty tensor");
  lo = t.min();
  hi = t.max();
  Tensor out(t.shape());
  if (hi > lo) {
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = (t[i] - lo) / (hi - lo);
  }
  return out;
}

ReconPanels recon_panels(const Model& model, const Tensor& image) {
  check_image(image);
  NoGradGuard guard;
  const ModelOutputs out = model.forward(Var(as_batch(image), false));
  if (!out.recon.first.defined() && !out.recon.second.defined()) {
    throw ConfigError("model '" + to_string(model.config().ablation) + "' has no reconstruction head");
  }
  ReconPanels p;
  p.input = image;
  const Tensor black(image.shape());
  p.rec1 = p.rec2 = p.diff1 = p.diff2 = black;
  if (out.recon.first.defined()) {
    p.rec1 = first_image(out.recon.first.value());
    p.diff1 = minmax_normalize(first_image(out.mask1.value()), p.diff1_lo, p.diff1_hi);
  }
  if (out.recon.second.defined()) {
    p.rec2 = first_image(out.recon.second.value());
    p.diff2 = minmax_normalize(first_image(out.mask2.value()), p.diff2_lo, p.diff2_hi);
  }
  return p;
}

Tensor compose_recon_row(const ReconPanels& panels) {
  check_image(panels.input);
  const int factor = std::max(1, (64 + panels.input.dim(2) - 1) / panels.input.dim(2));
  const int h = panels.input.dim(1) * factor, w = panels.input.dim(2) * factor;
  constexpr int kGap = 2, kStrip = 9;
  const int width = 5 * w + 4 * kGap;
  Tensor canvas({3, h + kStrip, width});
  const std::array<const Tensor*, 5> order{&panels.input, &panels.rec1, &panels.rec2, &panels.diff1, &panels.diff2};
  for (int i = 0; i < 5; ++i) paste(canvas, upscale_nearest(*order[i], factor), i * (w + kGap), 0);
  const std::string text =
      "D1 " + range_text(panels.diff1_lo, panels.diff1_hi) + " D2 " + range_text(panels.diff2_lo, panels.diff2_hi);
  draw_text(canvas, 2, h + 2, text);
  return canvas;
}

void draw_text(Tensor& image, int x, int y, const std::string& text, double value) {
  check_image(image);
  const int h = image.dim(1), w = image.dim(2);
  for (std::size_t k = 0; k < text.size(); ++k) {
    const auto rows = glyph(text[k]);
    const int gx = x + static_cast<int>(k) * 4;
    for (int r = 0; r < 5; ++r)
      for (int col = 0; col < 3; ++col) {
        if (!(rows[r] & (4 >> col))) continue;
        const int px = gx + col, py = y + r;
        if (px < 0 || py < 0 || px >= w || py >= h) continue;
        for (int c = 0; c < 3; ++c) image[(static_cast<std::size_t>(c) * h + py) * w + px] = value;
      }
  }
}

Tensor gradcam(Model& model, const Tensor& image, int target_class) {
  check_image(image);
  if (target_class != 0 && target_class != 1) throw ConfigError("gradcam target class must be 0 or 1");
  model.parameters().zero_grad();
  const ModelOutputs out = model.forward(Var(as_batch(image), false));
  Tensor upstream(out.logits.shape());
  upstream[target_class] = 1.0;
  backward(out.logits, upstream);

  const Var& f5 = out.pyramid.F[4];
  const Tensor& act = f5.value();
  const int c = act.dim(1), fh = act.dim(2), fw = act.dim(3), plane = fh * fw;
  Tensor grad = f5.grad().empty() ? Tensor(act.shape()) : f5.grad();
  Tensor cam({1, 1, fh, fw});
  for (int ch = 0; ch < c; ++ch) {
    double alpha = 0.0;
    for (int p = 0; p < plane; ++p) alpha += grad[ch * plane + p];
    alpha /= plane;
    for (int p = 0; p < plane; ++p) cam[p] += alpha * act[ch * plane + p];
  }
  double peak = 0.0;
  for (double& v : cam.values()) {
    v = std::max(v, 0.0);
    peak = std::max(peak, v);
  }
  if (peak > 0.0) {
    for (double& v : cam.values()) v /= peak;
  }
  model.parameters().zero_grad();
  Tensor up = kernels::resize_bilinear_forward(cam, image.dim(1), image.dim(2));
  for (double& v : up.values()) v = std::clamp(v, 0.0, 1.0);
  return up.reshaped({image.dim(1), image.dim(2)});
}

Tensor overlay_heatmap(const Tensor& image, const Tensor& heatmap) {
  check_image(image);
  const int h = image.dim(1), w = image.dim(2);
  if (heatmap.shape() != Shape{h, w}) throw ShapeError("heatmap " + shape_str(heatmap.shape()) + " does not match image");
  Tensor out(image.shape());
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::size_t p = 0; p < plane; ++p) {
    const double v = heatmap[p];
    const std::array<double, 3> jet{std::clamp(1.5 - std::abs(4.0 * v - 3.0), 0.0, 1.0),
                                    std::clamp(1.5 - std::abs(4.0 * v - 2.0), 0.0, 1.0),
                                    std::clamp(1.5 - std::abs(4.0 * v - 1.0), 0.0, 1.0)};
    for (int c = 0; c < 3; ++c) out[c * plane + p] = 0.5 * image[c * plane + p] + 0.5 * jet[c];
  }
  return out;
}

}  // namespace forgerecon
