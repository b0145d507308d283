#pragma once

#include <span>
#include <vector>

#include "forgerecon/autograd.hpp"
#include "forgerecon/reconstruction.hpp"

namespace forgerecon {

// Label convention throughout: 0 = real, 1 = fake.
inline constexpr int kRealLabel = 0;
inline constexpr int kFakeLabel = 1;

struct LossWeights {
  double lambda1 = 0.1;  // first reconstruction
  double lambda2 = 0.1;  // second reconstruction
  double lambda3 = 0.1;  // metric learning
};

struct LossBreakdown {
  Var classification;
  Var reconstruction1;
  Var reconstruction2;
  Var metric;
  Var total;

  double cls() const { return classification.value()[0]; }
  double r1() const { return reconstruction1.value()[0]; }
  double r2() const { return reconstruction2.value()[0]; }
  double m() const { return metric.value()[0]; }
  double total_value() const { return total.value()[0]; }
};

enum class ReconstructionNorm { squared, absolute };

// (1 - cos(a, b)) / 2. Throws DegenerateVectorError if either norm is zero.
double cosine_distance(std::span<const double> a, std::span<const double> b);

// Mean distance over unordered (real, real) pairs minus mean distance over
// (real, fake) pairs of the rows of features (B, C). A pair class with no
// pairs contributes 0. Zero rows are normalised with a 1e-12 norm floor.
Var metric_loss(const Var& features, std::span<const int> labels);

// Per-pixel error averaged over real samples only; 0 without real samples.
Var reconstruction_loss(const Var& image, const Var& reconstruction, std::span<const int> labels,
                        ReconstructionNorm norm = ReconstructionNorm::squared);

// L = L_cls + l1 L_r1 + l2 L_r2 + l3 L_m. A missing reconstruction (undefined
// Var) or an undefined features Var contributes a constant zero term.
LossBreakdown total_loss(const Var& logits, std::span<const int> labels, const Var& image,
                         const ReconstructionPair& recon, const Var& pooled_features, const LossWeights& weights,
                         ReconstructionNorm norm = ReconstructionNorm::squared);

}  // namespace forgerecon
