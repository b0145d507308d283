#include "forgerecon/reconstruction.hpp"

#include "forgerecon/errors.hpp"
#include "forgerecon/ops.hpp"

namespace forgerecon {

namespace {

// RGB projection starts at mid-gray so the clamp is inactive at init.
Conv make_rgb_head(ParameterStore& store, const std::string& name, int in_channels, Rng& rng) {
  Conv c = make_conv(store, name, {.in_channels = in_channels, .out_channels = 3, .kernel = 1}, rng);
  c.bias.mutable_value().fill(0.5);
  c.weight.mutable_value().fill(0.0);
  return c;
}

}  // namespace

ReconstructionHeads::ReconstructionHeads(ParameterStore& store, const BackboneConfig& backbone, int pool_nodes,
                                         HeadSelection heads, Rng& rng)
    : heads_(heads) {
  const auto& ch = backbone.stage_channels;
  if (heads.first) {
    selection_.emplace(store, "recon.selection", ch[1], ch[0], ch[0], rng);
    first_rgb_ = make_rgb_head(store, "recon.selection_rgb", ch[0], rng);
  }
  if (heads.second) {
    graph_.emplace(store, "recon.graph",
                   GraphHeadConfig{.decoder_channels = ch[1], .skip_channels = ch[0], .pool_nodes = pool_nodes}, rng);
    second_rgb_ = make_rgb_head(store, "recon.graph_rgb", kGraphChannels, rng);
  }
}

Var ReconstructionHeads::first_head(const Var& decoder_feat, const Var& skip, int out_h, int out_w) const {
  if (!selection_) throw ConfigError("first reconstruction head is disabled");
  Var rgb = first_rgb_(selection_->forward(decoder_feat, skip));
  return ag::clamp(ag::resize_bilinear(rgb, out_h, out_w), 0.0, 1.0);
}

Var ReconstructionHeads::second_head(const Var& decoder_feat, const Var& skip, int out_h, int out_w) const {
  if (!graph_) throw ConfigError("second reconstruction head is disabled");
  Var rgb = second_rgb_(graph_->forward(decoder_feat, skip));
  return ag::clamp(ag::resize_bilinear(rgb, out_h, out_w), 0.0, 1.0);
}

ReconstructionPair ReconstructionHeads::reconstruct(const DecoderState& decoder, const FeaturePyramid& pyramid,
                                                    int out_h, int out_w) const {
  const Var& feat = decoder.stages[2];
  const Var& skip = pyramid.F[0];
  if (!feat.defined() || !skip.defined()) throw ConfigError("reconstruction needs the last decoder stage and F1");
  ReconstructionPair pair;
  if (heads_.first) pair.first = first_head(feat, skip, out_h, out_w);
  if (heads_.second) pair.second = second_head(feat, skip, out_h, out_w);
  return pair;
}

}  // namespace forgerecon
