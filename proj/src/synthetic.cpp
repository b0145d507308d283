#include "forgerecon/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <utility>

#include "forgerecon/errors.hpp"
#include "forgerecon/image_io.hpp"
#include "forgerecon/perturb.hpp"

namespace forgerecon {
namespace {

using Rng = std::mt19937_64;

constexpr double kGrainSigma = 0.08;
constexpr double kNoiseTamperSigma = 0.15;
constexpr double kTamperBlurSigma = 2.0;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

double smoothstep(double edge0, double edge1, double x) {
  const double t = std::clamp((x - edge0) / (edge1 - edge0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

struct Ellipse {
  double cx, cy, rx, ry;
  std::array<double, 3> color;
  // Soft coverage in [0, 1] with a one-pixel transition band.
  double coverage(double x, double y, double size) const {
    const double dx = (x - cx) / rx, dy = (y - cy) / ry;
    const double r = std::sqrt(dx * dx + dy * dy);
    const double band = 1.0 / (std::min(rx, ry) * size);
    return 1.0 - smoothstep(1.0 - band, 1.0 + band, r);
  }
};

// Grain-free procedural face. Coordinates are in units of the image size.
Tensor render_face(Rng& rng, int size) {
  Tensor img({3, size, size});
  const std::array<double, 3> bg0{uniform(rng, 0.1, 0.9), uniform(rng, 0.1, 0.9), uniform(rng, 0.1, 0.9)};
  const std::array<double, 3> bg1{uniform(rng, 0.1, 0.9), uniform(rng, 0.1, 0.9), uniform(rng, 0.1, 0.9)};
  const double angle = uniform(rng, 0.0, 2.0 * 3.141592653589793);
  const double skin_r = uniform(rng, 0.55, 0.92);
  Ellipse face{0.5 + uniform(rng, -0.06, 0.06), 0.52 + uniform(rng, -0.06, 0.06), uniform(rng, 0.26, 0.34),
               uniform(rng, 0.32, 0.40),
               {skin_r, skin_r * uniform(rng, 0.68, 0.85), skin_r * uniform(rng, 0.52, 0.72)}};
  Ellipse hair{face.cx, face.cy - face.ry * 0.55, face.rx * 1.08, face.ry * 0.6,
               {uniform(rng, 0.05, 0.45), uniform(rng, 0.03, 0.3), uniform(rng, 0.02, 0.2)}};
  const double eye_dx = face.rx * uniform(rng, 0.38, 0.5);
  const double eye_y = face.cy - face.ry * uniform(rng, 0.1, 0.22);
  const std::array<double, 3> iris{uniform(rng, 0.05, 0.35), uniform(rng, 0.05, 0.35), uniform(rng, 0.05, 0.4)};
  Ellipse eye_l{face.cx - eye_dx, eye_y, face.rx * 0.2, face.ry * 0.09, iris};
  Ellipse eye_r{face.cx + eye_dx, eye_y, face.rx * 0.2, face.ry * 0.09, iris};
  Ellipse mouth{face.cx, face.cy + face.ry * uniform(rng, 0.45, 0.58), face.rx * uniform(rng, 0.3, 0.45),
                face.ry * 0.08, {uniform(rng, 0.5, 0.8), uniform(rng, 0.1, 0.3), uniform(rng, 0.1, 0.3)}};

  const std::size_t plane = static_cast<std::size_t>(size) * size;
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = (x + 0.5) / size, v = (y + 0.5) / size;
      const double t = std::clamp(0.5 + (u - 0.5) * ca + (v - 0.5) * sa, 0.0, 1.0);
      std::array<double, 3> px{};
      for (int c = 0; c < 3; ++c) px[c] = bg0[c] * (1.0 - t) + bg1[c] * t;
      auto paint = [&](const Ellipse& e, double shade) {
        const double a = e.coverage(u, v, size);
        for (int c = 0; c < 3; ++c) px[c] = px[c] * (1.0 - a) + e.color[c] * shade * a;
      };
      const double fx = (u - face.cx) / face.rx, fy = (v - face.cy) / face.ry;
      paint(hair, 1.0);
      paint(face, 1.0 - 0.25 * std::min(1.0, fx * fx + fy * fy));
      paint(eye_l, 1.0);
      paint(eye_r, 1.0);
      paint(mouth, 1.0);
      for (int c = 0; c < 3; ++c) img[c * plane + static_cast<std::size_t>(y) * size + x] = px[c];
    }
  }
  return img;
}

void add_grain(Tensor& img, Rng& rng, double sigma) {
  std::normal_distribution<double> n(0.0, sigma);
  for (double& v : img.values()) v = std::clamp(v + n(rng), 0.0, 1.0);
}

struct Rect {
  int x, y, w, h;
};

// Uniform over all integer rectangles whose area fraction lies in the range.
Rect sample_rect(Rng& rng, int size, double min_area, double max_area) {
  const double area = static_cast<double>(size) * size;
  std::vector<std::pair<int, int>> shapes;
  for (int w = 2; w < size; ++w) {
    for (int h = 2; h < size; ++h) {
      const double frac = w * h / area;
      if (frac >= min_area && frac <= max_area) shapes.emplace_back(w, h);
    }
  }
  if (shapes.empty()) {
    throw ConfigError("no rectangle of a " + std::to_string(size) + "px image fits the tamper area range");
  }
  const auto [w, h] = shapes[std::uniform_int_distribution<std::size_t>(0, shapes.size() - 1)(rng)];
  const int x = std::uniform_int_distribution<int>(0, size - w)(rng);
  const int y = std::uniform_int_distribution<int>(0, size - h)(rng);
  return {x, y, w, h};
}

template <typename F>
void for_each_in_rect(const Rect& r, int size, F&& f) {
  for (int y = r.y; y < r.y + r.h; ++y)
    for (int x = r.x; x < r.x + r.w; ++x) f(static_cast<std::size_t>(y) * size + x);
}

}  // namespace

std::string to_string(TamperKind kind) {
  switch (kind) {
    case TamperKind::splice: return "splice";
    case TamperKind::local_blur: return "local_blur";
    case TamperKind::local_noise: return "local_noise";
    case TamperKind::color_transplant: return "color_transplant";
  }
  return "unknown";
}

TamperKind parse_tamper_kind(const std::string& name) {
  for (TamperKind k : {TamperKind::splice, TamperKind::local_blur, TamperKind::local_noise,
                       TamperKind::color_transplant}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown tamper kind '" + name + "'");
}

void SyntheticConfig::validate() const {
  if (image_size < 8) throw ConfigError("synthetic image_size must be at least 8");
  if (tamper_kinds.empty()) throw ConfigError("synthetic tamper_kinds is empty");
  if (!(min_area > 0.0 && min_area <= max_area && max_area < 1.0)) {
    throw ConfigError("tamper area range must satisfy 0 < min <= max < 1");
  }
}

SyntheticSample generate_synthetic_pair(std::uint64_t seed, const SyntheticConfig& config) {
  config.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  Rng rng(seq);
  const int s = config.image_size;
  const std::size_t plane = static_cast<std::size_t>(s) * s;

  SyntheticSample out;
  out.real = render_face(rng, s);
  add_grain(out.real, rng, kGrainSigma);
  out.real = quantize_8bit(out.real);

  out.kind = config.tamper_kinds[std::uniform_int_distribution<std::size_t>(0, config.tamper_kinds.size() - 1)(rng)];
  const Rect r = sample_rect(rng, s, config.min_area, config.max_area);
  out.mask = Tensor({1, s, s});
  for_each_in_rect(r, s, [&](std::size_t p) { out.mask[p] = 1.0; });

  // Candidate values for the tampered region; only pixels inside the mask are used.
  Tensor source;
  switch (out.kind) {
    case TamperKind::splice: {
      // Grain-free donor face rendered at half resolution and upsampled.
      const Tensor donor = render_face(rng, std::max(4, s / 2));
      source = resize_image(donor, s, s);
      break;
    }
    case TamperKind::local_blur:
      source = gaussian_blur(out.real, kTamperBlurSigma);
      break;
    case TamperKind::local_noise: {
      source = out.real;
      add_grain(source, rng, kNoiseTamperSigma);
      break;
    }
    case TamperKind::color_transplant: {
      source = out.real;
      std::array<double, 3> shift{};
      for (double& v : shift) v = uniform(rng, 0.15, 0.3) * (rng() % 2 ? 1.0 : -1.0);
      for (int c = 0; c < 3; ++c)
        for (std::size_t p = 0; p < plane; ++p) source[c * plane + p] = std::clamp(source[c * plane + p] + shift[c], 0.0, 1.0);
      break;
    }
  }
  out.fake = out.real;
  for (int c = 0; c < 3; ++c) {
    for_each_in_rect(r, s, [&](std::size_t p) { out.fake[c * plane + p] = source[c * plane + p]; });
  }
  out.fake = quantize_8bit(out.fake);
  return out;
}

void materialize_synthetic(const std::filesystem::path& root, const SyntheticConfig& config, int train_pairs,
                           int test_pairs) {
  namespace fs = std::filesystem;
  config.validate();
  if (train_pairs < 0 || test_pairs < 0) throw ConfigError("pair counts must be non-negative");
  for (const auto& split : {std::string("train"), std::string("test")}) {
    for (const char* cls : {"real", "fake"}) fs::create_directories(root / split / cls);
  }
  std::ofstream manifest(root / "manifest.csv");
  if (!manifest) throw std::runtime_error("cannot write " + (root / "manifest.csv").string());
  manifest << "path,label,tamper_kind,seed\n";
  auto emit = [&](const std::string& split, int pairs, std::uint64_t offset) {
    for (int i = 0; i < pairs; ++i) {
      const std::uint64_t seed = offset + static_cast<std::uint64_t>(i);
      const SyntheticSample s = generate_synthetic_pair(seed, config);
      char name[32];
      std::snprintf(name, sizeof name, "%06d.png", i);
      const std::string real_rel = split + "/real/" + name;
      const std::string fake_rel = split + "/fake/" + name;
      write_png(root / real_rel, s.real);
      write_png(root / fake_rel, s.fake);
      manifest << real_rel << ",0,none," << seed << "\n";
      manifest << fake_rel << ",1," << to_string(s.kind) << "," << seed << "\n";
    }
  };
  emit("train", train_pairs, 0);
  emit("test", test_pairs, kTestSeedOffset);
}

}  // namespace forgerecon
