#include "forgerecon/detector.hpp"

#include <cmath>

#include "forgerecon/errors.hpp"
#include "forgerecon/ops.hpp"

namespace forgerecon {

Var difference_mask(const Var& image, const Var& reconstruction) {
  if (image.shape() != reconstruction.shape()) {
    throw ShapeError("difference mask: image " + shape_str(image.shape()) + " vs reconstruction " +
                     shape_str(reconstruction.shape()));
  }
  return ag::abs(ag::sub(image, reconstruction));
}

EncodingFusion::EncodingFusion(ParameterStore& store, const BackboneConfig& backbone, Rng& rng) {
  const auto sizes = backbone.stage_sizes();
  const auto [h4, w4] = sizes[3];
  const auto [h5, w5] = sizes[4];
  expected_h_ = h5;
  expected_w_ = w5;
  const int stride = (h4 + h5 - 1) / h5;
  if (kernels::conv_out_size(h4, 1, stride, 0) != h5 || kernels::conv_out_size(w4, 1, stride, 0) != w5) {
    throw ConfigError("cannot align D4 " + std::to_string(h4) + "x" + std::to_string(w4) + " to F5 " +
                      std::to_string(h5) + "x" + std::to_string(w5) + " with a strided 1x1 conv");
  }
  projection_ = make_conv(store, "fusion.projection",
                          {.in_channels = backbone.stage_channels[3],
                           .out_channels = backbone.stage_channels[4],
                           .kernel = 1,
                           .stride = stride,
                           .pad = 0},
                          rng);
}

Var EncodingFusion::fuse(const Var& d4, const Var& f5) const {
  Var projected = projection_(d4);
  if (projected.shape() != f5.shape()) {
    throw ShapeError("encoding fusion: projected D4 " + shape_str(projected.shape()) + " vs F5 " +
                     shape_str(f5.shape()));
  }
  return ag::add(projected, f5);
}

FeatureAggregation::FeatureAggregation(ParameterStore& store, const std::string& name, int channels,
                                       int out_channels, Rng& rng)
    : channels_(channels) {
  mask_conv_ = make_conv(store, name + ".mask_conv3", {.in_channels = 3, .out_channels = channels, .kernel = 3}, rng);
  fuse_conv_ = make_conv(store, name + ".fuse_conv3", {.in_channels = channels, .out_channels = channels, .kernel = 3}, rng);
  Tensor k({kChannelKernel});
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(kChannelKernel)));
  for (double& v : k.values()) v = dist(rng);
  channel_kernel_ = store.add(name + ".channel_kernel", std::move(k));
  conv1_ = make_conv(store, name + ".conv1", {.in_channels = channels, .out_channels = out_channels, .kernel = 1}, rng);
}

Var FeatureAggregation::fused(const Var& mask, const Var& encoding) const {
  if (mask.value().rank() != 4 || mask.dim(1) != 3) throw ShapeError("aggregation mask must be (B,3,H,W)");
  if (encoding.value().rank() != 4 || encoding.dim(1) != channels_ || encoding.dim(0) != mask.dim(0)) {
    throw ShapeError("aggregation encoding " + shape_str(encoding.shape()) + " incompatible with mask " +
                     shape_str(mask.shape()));
  }
  Var small = ag::resize_bilinear(mask, encoding.dim(2), encoding.dim(3));
  Var gate = ag::sigmoid(mask_conv_(small));
  return fuse_conv_(ag::add(ag::mul(encoding, gate), encoding));
}

Var FeatureAggregation::forward(const Var& mask, const Var& encoding) const {
  Var fd = fused(mask, encoding);
  Var weights = ag::sigmoid(ag::channel_conv1d(ag::global_avg_pool(fd), channel_kernel_));
  return conv1_(ag::scale_channels(fd, weights));
}

MaskAddition::MaskAddition(ParameterStore& store, const std::string& name, int channels, Rng& rng) {
  projection_ = make_conv(store, name + ".projection", {.in_channels = 3, .out_channels = channels, .kernel = 1}, rng);
}

Var MaskAddition::forward(const Var& mask, const Var& encoding) const {
  Var small = ag::resize_bilinear(mask, encoding.dim(2), encoding.dim(3));
  return ag::add(encoding, projection_(small));
}

Classifier::Classifier(ParameterStore& store, const std::string& name, int channels, Rng& rng) {
  Tensor w({2, channels});
  // Small init keeps the initial logits near zero.
  std::normal_distribution<double> dist(0.0, 0.01);
  for (double& v : w.values()) v = dist(rng);
  weight_ = store.add(name + ".weight", std::move(w));
  bias_ = store.add(name + ".bias", Tensor({2}));
}

Var Classifier::classify(const std::vector<Var>& branches) const {
  if (branches.empty()) throw ConfigError("classifier needs at least one branch");
  Var acc = branches[0];
  for (std::size_t i = 1; i < branches.size(); ++i) {
    if (branches[i].shape() != acc.shape()) {
      throw ShapeError("classifier branch shapes differ: " + shape_str(acc.shape()) + " vs " +
                       shape_str(branches[i].shape()));
    }
    acc = ag::add(acc, branches[i]);
  }
  return ag::linear(ag::global_avg_pool(acc), weight_, bias_);
}

}  // namespace forgerecon
