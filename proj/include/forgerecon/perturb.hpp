#pragma once

#include <array>
#include <string>

#include "forgerecon/tensor.hpp"

namespace forgerecon {

enum class PerturbationKind { compression, gaussian_blur, contrast_jitter, saturate_jitter, pixelation };

inline constexpr std::array<PerturbationKind, 5> kAllPerturbations{
    PerturbationKind::compression, PerturbationKind::gaussian_blur, PerturbationKind::contrast_jitter,
    PerturbationKind::saturate_jitter, PerturbationKind::pixelation};
inline constexpr int kMaxSeverity = 5;

std::string to_string(PerturbationKind kind);
PerturbationKind parse_perturbation_kind(const std::string& name);

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::gaussian_blur;
  int severity = 0;  // 0 is the identity, 1..5 increasingly strong
};

// Fixed parameter ladders, indexed by severity - 1.
inline constexpr std::array<int, 5> kJpegQuality{90, 70, 50, 30, 10};
inline constexpr std::array<double, 5> kBlurSigma{0.5, 1.0, 1.5, 2.0, 3.0};
inline constexpr std::array<int, 5> kPixelBlock{2, 4, 6, 8, 16};
inline constexpr double kContrastBase = 0.8;    // factor = base^severity
inline constexpr double kSaturationBase = 0.7;  // factor = base^severity

// Applies the distortion to a (3, H, W) image in [0, 1]; the result stays in
// [0, 1]. Severity 0 returns an exact copy. Throws ConfigError on a severity
// outside 0..5.
Tensor perturb(const Tensor& image, const PerturbationSpec& spec);

// Building blocks, exposed for tests.
Tensor gaussian_blur(const Tensor& image, double sigma);
Tensor dct_quantize(const Tensor& image, int quality);
Tensor pixelate(const Tensor& image, int block);

// Variance of the 4-neighbour Laplacian of the luma channel over interior pixels.
double laplacian_variance(const Tensor& image);

}  // namespace forgerecon
