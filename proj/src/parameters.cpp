#include "forgerecon/parameters.hpp"

#include <algorithm>
#include <cmath>

#include "forgerecon/errors.hpp"
#include "forgerecon/ops.hpp"

namespace forgerecon {

Var ParameterStore::add(const std::string& name, Tensor init) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
  Var v(std::move(init), true);
  index_.emplace(name, entries_.size());
  entries_.emplace_back(name, v);
  return v;
}

const Var& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return entries_[it->second].second;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, v] : entries_) n += v.value().size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [name, v] : entries_) v.zero_grad();
}

Tensor he_normal(const Shape& shape, int fan_in, Rng& rng) {
  Tensor t(shape);
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / std::max(fan_in, 1)));
  for (double& v : t.values()) v = dist(rng);
  return t;
}

Var Conv::operator()(const Var& x) const {
  if (x.value().rank() != 4 || x.dim(1) != in_channels()) {
    throw ConfigError("conv expects " + std::to_string(in_channels()) + " input channels, got input " +
                      shape_str(x.shape()));
  }
  return ag::conv2d(x, weight, bias, geom);
}

Conv make_conv(ParameterStore& store, const std::string& name, const ConvSpec& spec, Rng& rng) {
  if (spec.in_channels % spec.groups != 0 || spec.out_channels % spec.groups != 0) {
    throw ConfigError("conv " + name + ": channels not divisible by groups");
  }
  Conv c;
  const int cin_g = spec.in_channels / spec.groups;
  c.geom.stride = spec.stride;
  c.geom.pad = spec.pad < 0 ? spec.kernel / 2 : spec.pad;
  c.geom.groups = spec.groups;
  c.weight = store.add(name + ".weight", he_normal({spec.out_channels, cin_g, spec.kernel, spec.kernel},
                                                   cin_g * spec.kernel * spec.kernel, rng));
  if (spec.bias) c.bias = store.add(name + ".bias", Tensor({spec.out_channels}));
  return c;
}

GroupNorm make_group_norm(ParameterStore& store, const std::string& name, int channels, int max_groups) {
  GroupNorm n;
  n.groups = std::max(1, std::min(max_groups, channels));
  while (channels % n.groups != 0) --n.groups;
  Tensor ones({channels});
  ones.fill(1.0);
  n.gamma = store.add(name + ".gamma", std::move(ones));
  n.beta = store.add(name + ".beta", Tensor({channels}));
  return n;
}

SeparableConv make_separable(ParameterStore& store, const std::string& name, int in_channels, int out_channels,
                             int stride, Rng& rng) {
  SeparableConv s;
  s.depthwise = make_conv(store, name + ".dw",
                          {.in_channels = in_channels, .out_channels = in_channels, .kernel = 3, .stride = stride,
                           .groups = in_channels, .bias = true},
                          rng);
  s.pointwise =
      make_conv(store, name + ".pw", {.in_channels = in_channels, .out_channels = out_channels, .kernel = 1}, rng);
  return s;
}

}  // namespace forgerecon
