#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "forgerecon/autograd.hpp"
#include "forgerecon/kernels.hpp"
#include "forgerecon/ops.hpp"

namespace forgerecon {

using Rng = std::mt19937_64;

// Named, insertion-ordered set of trainable leaf Vars.
class ParameterStore {
 public:
  Var add(const std::string& name, Tensor init);
  const Var& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  const std::vector<std::pair<std::string, Var>>& entries() const { return entries_; }

  void zero_grad();

 private:
  std::vector<std::pair<std::string, Var>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

Tensor he_normal(const Shape& shape, int fan_in, Rng& rng);

// 2D convolution layer with optional bias.
struct Conv {
  Var weight;
  Var bias;  // undefined when the layer has no bias
  kernels::ConvGeometry geom;

  Var operator()(const Var& x) const;
  int in_channels() const { return weight.dim(1) * geom.groups; }
  int out_channels() const { return weight.dim(0); }
};

struct ConvSpec {
  int in_channels;
  int out_channels;
  int kernel = 3;
  int stride = 1;
  int pad = -1;  // -1: kernel / 2
  int groups = 1;
  bool bias = true;
};

Conv make_conv(ParameterStore& store, const std::string& name, const ConvSpec& spec, Rng& rng);

// Group normalisation with a learned per-channel affine (gamma = 1, beta = 0
// at initialisation).
struct GroupNorm {
  Var gamma;
  Var beta;
  int groups = 1;

  Var operator()(const Var& x) const { return ag::group_norm(x, gamma, beta, groups); }
};

// Uses min(max_groups, channels) groups, reduced until it divides channels.
GroupNorm make_group_norm(ParameterStore& store, const std::string& name, int channels, int max_groups = 8);

// Depthwise 3x3 followed by pointwise 1x1.
struct SeparableConv {
  Conv depthwise;
  Conv pointwise;

  Var operator()(const Var& x) const { return pointwise(depthwise(x)); }
};

SeparableConv make_separable(ParameterStore& store, const std::string& name, int in_channels, int out_channels,
                             int stride, Rng& rng);

}  // namespace forgerecon
