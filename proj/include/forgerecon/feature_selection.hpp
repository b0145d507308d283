#pragma once

#include <array>
#include <string>

#include "forgerecon/autograd.hpp"
#include "forgerecon/encoder.hpp"
#include "forgerecon/parameters.hpp"

namespace forgerecon {

// Attention-gated fusion of a decoder feature with an encoder skip feature:
//   X    = concat(resize(prev to skip size), skip)
//   gate = sigmoid(sep_gate(X))            same shape as X
//   A    = sep_out(sep_feat(X) * gate) + conv3(X)
// The three separable convs have independent weights.
class FeatureSelection {
 public:
  FeatureSelection(ParameterStore& store, const std::string& name, int prev_channels, int skip_channels,
                   int out_channels, Rng& rng);

  Var forward(const Var& prev, const Var& skip) const;

  // Exposed for the attention-map invariant test.
  Var gate(const Var& fused) const;
  Var fuse_inputs(const Var& prev, const Var& skip) const;

  int prev_channels() const { return prev_channels_; }
  int skip_channels() const { return skip_channels_; }
  int out_channels() const { return out_channels_; }

  const SeparableConv& gate_conv() const { return gate_; }
  const SeparableConv& feature_conv() const { return feature_; }
  const SeparableConv& output_conv() const { return output_; }
  const Conv& conv3() const { return conv3_; }

 private:
  int prev_channels_, skip_channels_, out_channels_;
  SeparableConv gate_;
  SeparableConv feature_;
  SeparableConv output_;
  Conv conv3_;
};

struct DecoderState {
  std::array<Var, 3> stages;  // outputs of the three selection stages
};

// Stage pairing (F5,F4) -> (., F3) -> (., F2); stage k emits the channel
// count of its skip input.
class Decoder {
 public:
  Decoder(ParameterStore& store, const BackboneConfig& backbone, Rng& rng);

  DecoderState decode(const FeaturePyramid& pyramid) const;

  const std::array<FeatureSelection, 3>& stages() const { return stages_; }

 private:
  std::array<FeatureSelection, 3> stages_;
};

}  // namespace forgerecon
