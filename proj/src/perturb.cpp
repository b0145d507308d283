#include "forgerecon/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "forgerecon/errors.hpp"

namespace forgerecon {
namespace {

constexpr double kLumaR = 0.299, kLumaG = 0.587, kLumaB = 0.114;

// IJG reference quantisation tables (quality 50).
constexpr std::array<int, 64> kLumaTable{16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
                                         14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
                                         18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
                                         49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
constexpr std::array<int, 64> kChromaTable{17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
                                           24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
                                           99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
                                           99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

void check_image(const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) <= 0 || image.dim(2) <= 0) {
    throw ShapeError("perturbation expects a (3, H, W) image, got " + shape_str(image.shape()));
  }
}

void clamp_unit(Tensor& t) {
  for (double& v : t.values()) v = std::clamp(v, 0.0, 1.0);
}

int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n - 2;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

std::array<int, 64> scaled_table(const std::array<int, 64>& base, int quality) {
  const int q = std::clamp(quality, 1, 100);
  const int scale = q < 50 ? 5000 / q : 200 - 2 * q;
  std::array<int, 64> out{};
  for (int i = 0; i < 64; ++i) out[i] = std::clamp((base[i] * scale + 50) / 100, 1, 255);
  return out;
}

struct DctBasis {
  std::array<double, 64> m{};  // m[u * 8 + x] = c(u) cos((2x + 1) u pi / 16)
  DctBasis() {
    for (int u = 0; u < 8; ++u) {
      const double cu = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) m[u * 8 + x] = cu * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
    }
  }
};

const DctBasis& dct_basis() {
  static const DctBasis basis;
  return basis;
}

// Forward DCT, quantise, dequantise, inverse DCT of one 8x8 block in place.
void quantize_block(std::array<double, 64>& block, const std::array<int, 64>& table) {
  const auto& m = dct_basis().m;
  std::array<double, 64> tmp{}, coef{};
  for (int u = 0; u < 8; ++u)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int y = 0; y < 8; ++y) s += m[u * 8 + y] * block[y * 8 + x];
      tmp[u * 8 + x] = s;
    }
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) {
      double s = 0.0;
      for (int x = 0; x < 8; ++x) s += tmp[u * 8 + x] * m[v * 8 + x];
      coef[u * 8 + v] = std::round(s / table[u * 8 + v]) * table[u * 8 + v];
    }
  for (int y = 0; y < 8; ++y)
    for (int v = 0; v < 8; ++v) {
      double s = 0.0;
      for (int u = 0; u < 8; ++u) s += m[u * 8 + y] * coef[u * 8 + v];
      tmp[y * 8 + v] = s;
    }
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v) s += tmp[y * 8 + v] * m[v * 8 + x];
      block[y * 8 + x] = s;
    }
}

}  // namespace

std::string to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::compression: return "compression";
    case PerturbationKind::gaussian_blur: return "gaussian_blur";
    case PerturbationKind::contrast_jitter: return "contrast_jitter";
    case PerturbationKind::saturate_jitter: return "saturate_jitter";
    case PerturbationKind::pixelation: return "pixelation";
  }
  return "unknown";
}

PerturbationKind parse_perturbation_kind(const std::string& name) {
  for (PerturbationKind k : kAllPerturbations) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown perturbation kind '" + name + "'");
}

Tensor gaussian_blur(const Tensor& image, double sigma) {
  check_image(image);
  if (sigma <= 0.0) return image;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) total += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& v : k) v /= total;

  const int h = image.dim(1), w = image.dim(2);
  Tensor tmp(image.shape()), out(image.shape());
  for (int c = 0; c < 3; ++c) {
    const double* src = image.data() + static_cast<std::size_t>(c) * h * w;
    double* mid = tmp.data() + static_cast<std::size_t>(c) * h * w;
    double* dst = out.data() + static_cast<std::size_t>(c) * h * w;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int i = -radius; i <= radius; ++i) s += k[i + radius] * src[y * w + reflect(x + i, w)];
        mid[y * w + x] = s;
      }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int i = -radius; i <= radius; ++i) s += k[i + radius] * mid[reflect(y + i, h) * w + x];
        dst[y * w + x] = s;
      }
  }
  clamp_unit(out);
  return out;
}

Tensor dct_quantize(const Tensor& image, int quality) {
  check_image(image);
  const int h = image.dim(1), w = image.dim(2);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  // YCbCr on the 0..255 scale, level-shifted by 128.
  std::array<std::vector<double>, 3> ycc;
  for (auto& p : ycc) p.resize(plane);
  for (std::size_t i = 0; i < plane; ++i) {
    const double r = image[i] * 255.0, g = image[plane + i] * 255.0, b = image[2 * plane + i] * 255.0;
    ycc[0][i] = kLumaR * r + kLumaG * g + kLumaB * b - 128.0;
    ycc[1][i] = -0.168736 * r - 0.331264 * g + 0.5 * b;
    ycc[2][i] = 0.5 * r - 0.418688 * g - 0.081312 * b;
  }
  const auto luma_q = scaled_table(kLumaTable, quality);
  const auto chroma_q = scaled_table(kChromaTable, quality);
  std::array<double, 64> block{};
  for (int c = 0; c < 3; ++c) {
    const auto& table = c == 0 ? luma_q : chroma_q;
    for (int by = 0; by < h; by += 8)
      for (int bx = 0; bx < w; bx += 8) {
        // Edge blocks are padded by replicating the last row/column.
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x) {
            const int sy = std::min(by + y, h - 1), sx = std::min(bx + x, w - 1);
            block[y * 8 + x] = ycc[c][static_cast<std::size_t>(sy) * w + sx];
          }
        quantize_block(block, table);
        for (int y = 0; y < 8 && by + y < h; ++y)
          for (int x = 0; x < 8 && bx + x < w; ++x) ycc[c][static_cast<std::size_t>(by + y) * w + bx + x] = block[y * 8 + x];
      }
  }
  Tensor out(image.shape());
  for (std::size_t i = 0; i < plane; ++i) {
    const double y = ycc[0][i] + 128.0, cb = ycc[1][i], cr = ycc[2][i];
    out[i] = (y + 1.402 * cr) / 255.0;
    out[plane + i] = (y - 0.344136 * cb - 0.714136 * cr) / 255.0;
    out[2 * plane + i] = (y + 1.772 * cb) / 255.0;
  }
  clamp_unit(out);
  return out;
}

Tensor pixelate(const Tensor& image, int block) {
  check_image(image);
  if (block <= 1) return image;
  const int h = image.dim(1), w = image.dim(2);
  Tensor out(image.shape());
  for (int c = 0; c < 3; ++c) {
    const double* src = image.data() + static_cast<std::size_t>(c) * h * w;
    double* dst = out.data() + static_cast<std::size_t>(c) * h * w;
    for (int by = 0; by < h; by += block)
      for (int bx = 0; bx < w; bx += block) {
        const int ey = std::min(by + block, h), ex = std::min(bx + block, w);
        double s = 0.0;
        for (int y = by; y < ey; ++y)
          for (int x = bx; x < ex; ++x) s += src[y * w + x];
        const double mean = s / ((ey - by) * (ex - bx));
        for (int y = by; y < ey; ++y)
          for (int x = bx; x < ex; ++x) dst[y * w + x] = mean;
      }
  }
  return out;
}

Tensor perturb(const Tensor& image, const PerturbationSpec& spec) {
  check_image(image);
  if (spec.severity < 0 || spec.severity > kMaxSeverity) {
    throw ConfigError("perturbation severity must be in 0..5, got " + std::to_string(spec.severity));
  }
  if (spec.severity == 0) return image;
  const int idx = spec.severity - 1;
  const std::size_t plane = static_cast<std::size_t>(image.dim(1)) * image.dim(2);
  switch (spec.kind) {
    case PerturbationKind::compression:
      return dct_quantize(image, kJpegQuality[idx]);
    case PerturbationKind::gaussian_blur:
      return gaussian_blur(image, kBlurSigma[idx]);
    case PerturbationKind::pixelation:
      return pixelate(image, kPixelBlock[idx]);
    case PerturbationKind::contrast_jitter: {
      const double factor = std::pow(kContrastBase, spec.severity);
      double mean = 0.0;
      for (std::size_t i = 0; i < plane; ++i) mean += kLumaR * image[i] + kLumaG * image[plane + i] + kLumaB * image[2 * plane + i];
      mean /= static_cast<double>(plane);
      Tensor out = image;
      for (double& v : out.values()) v = mean + (v - mean) * factor;
      clamp_unit(out);
      return out;
    }
    case PerturbationKind::saturate_jitter: {
      const double factor = std::pow(kSaturationBase, spec.severity);
      Tensor out = image;
      for (std::size_t i = 0; i < plane; ++i) {
        const double gray = kLumaR * image[i] + kLumaG * image[plane + i] + kLumaB * image[2 * plane + i];
        for (int c = 0; c < 3; ++c) out[c * plane + i] = gray + (image[c * plane + i] - gray) * factor;
      }
      clamp_unit(out);
      return out;
    }
  }
  throw ConfigError("unknown perturbation kind");
}

double laplacian_variance(const Tensor& image) {
  check_image(image);
  const int h = image.dim(1), w = image.dim(2);
  if (h < 3 || w < 3) throw EmptyInputError("laplacian_variance needs at least a 3x3 image");
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<double> luma(plane);
  for (std::size_t i = 0; i < plane; ++i) luma[i] = kLumaR * image[i] + kLumaG * image[plane + i] + kLumaB * image[2 * plane + i];
  std::vector<double> lap;
  lap.reserve(static_cast<std::size_t>(h - 2) * (w - 2));
  for (int y = 1; y < h - 1; ++y)
    for (int x = 1; x < w - 1; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      lap.push_back(luma[p - w] + luma[p + w] + luma[p - 1] + luma[p + 1] - 4.0 * luma[p]);
    }
  double mean = 0.0;
  for (double v : lap) mean += v;
  mean /= static_cast<double>(lap.size());
  double var = 0.0;
  for (double v : lap) var += (v - mean) * (v - mean);
  return var / static_cast<double>(lap.size());
}

}  // namespace forgerecon
