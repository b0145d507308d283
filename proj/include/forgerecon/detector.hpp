#pragma once

#include <string>
#include <utility>
#include <vector>

#include "forgerecon/autograd.hpp"
#include "forgerecon/encoder.hpp"
#include "forgerecon/parameters.hpp"

namespace forgerecon {

// |X - X_hat|, elementwise. Throws ShapeError on mismatch.
Var difference_mask(const Var& image, const Var& reconstruction);

// Projects D4 onto F5's channels and grid with a strided 1x1 conv and adds F5.
class EncodingFusion {
 public:
  EncodingFusion(ParameterStore& store, const BackboneConfig& backbone, Rng& rng);
  Var fuse(const Var& d4, const Var& f5) const;
  const Conv& projection() const { return projection_; }

 private:
  Conv projection_;
  int expected_h_, expected_w_;
};

inline constexpr int kChannelKernel = 3;

// Mask-guided aggregation of the fused encoding:
//   g   = sigmoid(mask_conv3(resize(R to F_e)))
//   F_d = fuse_conv3(F_e * g + F_e)
//   out = conv1(sigmoid(conv1d_k3(GAP(F_d))) * F_d)
class FeatureAggregation {
 public:
  FeatureAggregation(ParameterStore& store, const std::string& name, int channels, int out_channels, Rng& rng);

  Var forward(const Var& mask, const Var& encoding) const;
  // F_d only.
  Var fused(const Var& mask, const Var& encoding) const;

  const Conv& mask_conv() const { return mask_conv_; }
  const Conv& fuse_conv() const { return fuse_conv_; }
  const Conv& conv1() const { return conv1_; }
  const Var& channel_kernel() const { return channel_kernel_; }

 private:
  int channels_;
  Conv mask_conv_;
  Conv fuse_conv_;
  Var channel_kernel_;  // (3)
  Conv conv1_;
};

// Replacement used when aggregation is ablated: F_e + conv1x1(resize(R)).
class MaskAddition {
 public:
  MaskAddition(ParameterStore& store, const std::string& name, int channels, Rng& rng);
  Var forward(const Var& mask, const Var& encoding) const;

 private:
  Conv projection_;
};

// Sum of the branch features -> GAP -> affine map to 2 logits.
class Classifier {
 public:
  Classifier(ParameterStore& store, const std::string& name, int channels, Rng& rng);
  Var classify(const std::vector<Var>& branches) const;
  const Var& weight() const { return weight_; }
  const Var& bias() const { return bias_; }

 private:
  Var weight_;  // (2, C)
  Var bias_;    // (2)
};

}  // namespace forgerecon
