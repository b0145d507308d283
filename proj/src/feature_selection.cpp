#include "forgerecon/feature_selection.hpp"

#include "forgerecon/errors.hpp"
#include "forgerecon/ops.hpp"

namespace forgerecon {

FeatureSelection::FeatureSelection(ParameterStore& store, const std::string& name, int prev_channels,
                                   int skip_channels, int out_channels, Rng& rng)
    : prev_channels_(prev_channels), skip_channels_(skip_channels), out_channels_(out_channels) {
  if (prev_channels <= 0 || skip_channels <= 0 || out_channels <= 0) {
    throw ConfigError(name + ": channel counts must be positive");
  }
  const int fused = prev_channels + skip_channels;
  gate_ = make_separable(store, name + ".gate", fused, fused, 1, rng);
  feature_ = make_separable(store, name + ".feature", fused, fused, 1, rng);
  output_ = make_separable(store, name + ".output", fused, out_channels, 1, rng);
  conv3_ = make_conv(store, name + ".conv3", {.in_channels = fused, .out_channels = out_channels, .kernel = 3}, rng);
}

Var FeatureSelection::fuse_inputs(const Var& prev, const Var& skip) const {
  if (prev.value().rank() != 4 || skip.value().rank() != 4) throw ShapeError("feature selection expects rank-4 inputs");
  if (prev.dim(1) != prev_channels_ || skip.dim(1) != skip_channels_) {
    throw ConfigError("feature selection expects " + std::to_string(prev_channels_) + "+" +
                      std::to_string(skip_channels_) + " channels, got " + shape_str(prev.shape()) + " and " +
                      shape_str(skip.shape()));
  }
  Var resized = ag::resize_bilinear(prev, skip.dim(2), skip.dim(3));
  return ag::concat_channels({resized, skip});
}

Var FeatureSelection::gate(const Var& fused) const { return ag::sigmoid(gate_(fused)); }

Var FeatureSelection::forward(const Var& prev, const Var& skip) const {
  Var fused = fuse_inputs(prev, skip);
  Var gated = ag::mul(feature_(fused), gate(fused));
  return ag::add(output_(gated), conv3_(fused));
}

namespace {

std::array<FeatureSelection, 3> make_stages(ParameterStore& store, const BackboneConfig& b, Rng& rng) {
  const auto& ch = b.stage_channels;
  FeatureSelection s1(store, "decoder.stage1", ch[4], ch[3], ch[3], rng);
  FeatureSelection s2(store, "decoder.stage2", ch[3], ch[2], ch[2], rng);
  FeatureSelection s3(store, "decoder.stage3", ch[2], ch[1], ch[1], rng);
  return {std::move(s1), std::move(s2), std::move(s3)};
}

}  // namespace

Decoder::Decoder(ParameterStore& store, const BackboneConfig& backbone, Rng& rng)
    : stages_(make_stages(store, backbone, rng)) {}

DecoderState Decoder::decode(const FeaturePyramid& pyramid) const {
  for (int i = 1; i < 5; ++i) {
    if (!pyramid.F[i].defined()) throw ConfigError("decoder needs F2..F5");
  }
  DecoderState st;
  st.stages[0] = stages_[0].forward(pyramid.F[4], pyramid.F[3]);
  st.stages[1] = stages_[1].forward(st.stages[0], pyramid.F[2]);
  st.stages[2] = stages_[2].forward(st.stages[1], pyramid.F[1]);
  return st;
}

}  // namespace forgerecon
