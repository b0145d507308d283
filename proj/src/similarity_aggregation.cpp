#include "forgerecon/similarity_aggregation.hpp"

#include "forgerecon/errors.hpp"
#include "forgerecon/ops.hpp"

namespace forgerecon {

SimilarityAggregation::SimilarityAggregation(ParameterStore& store, const std::string& name,
                                             const GraphHeadConfig& config, Rng& rng)
    : config_(config) {
  if (config.decoder_channels <= 0 || config.skip_channels <= 0) throw ConfigError(name + ": channels must be positive");
  if (config.pool_nodes <= 0) throw EmptyInputError(name + ": graph needs at least one node");
  const int g = kGraphChannels;
  w_rho_ = make_conv(store, name + ".w_rho", {.in_channels = config.decoder_channels, .out_channels = g, .kernel = 1}, rng);
  w_theta_ = make_conv(store, name + ".w_theta", {.in_channels = g, .out_channels = g, .kernel = 1}, rng);
  w_phi_ = make_conv(store, name + ".w_phi", {.in_channels = g, .out_channels = g, .kernel = 1}, rng);
  skip_proj_ = make_conv(store, name + ".skip_proj", {.in_channels = config.skip_channels, .out_channels = g, .kernel = 1}, rng);
  const int m = config.pool_nodes * config.pool_nodes;
  adjacency_ = store.add(name + ".adjacency", he_normal({m, m}, m, rng));
  channel_mix_ = store.add(name + ".channel_mix", he_normal({g, g}, g, rng));
  w_z_ = make_conv(store, name + ".w_z", {.in_channels = g, .out_channels = g, .kernel = 1}, rng);
}

Var SimilarityAggregation::reason(const Var& correlation, const Var& theta_tokens, const Var& adjacency) const {
  Var nodes = ag::bmm(correlation, theta_tokens, false, true);            // (B, M, 16)
  Var propagated = ag::sub(nodes, ag::bmm(adjacency, nodes));              // (I - A) Z
  Var mixed = ag::relu(ag::bmm(propagated, channel_mix_, false, true));    // (B, M, 16)
  return ag::bmm(mixed, correlation, true, false);                        // (B, 16, N)
}

GraphTrace SimilarityAggregation::trace(const Var& decoder_feat, const Var& skip) const {
  if (decoder_feat.value().rank() != 4 || skip.value().rank() != 4) {
    throw ShapeError("graph head expects rank-4 inputs");
  }
  if (decoder_feat.dim(2) * decoder_feat.dim(3) == 0) {
    throw EmptyInputError("graph head: empty pixel set " + shape_str(decoder_feat.shape()));
  }
  GraphTrace t;
  t.reduced = w_rho_(decoder_feat);
  const int b = t.reduced.dim(0), g = kGraphChannels, h = t.reduced.dim(2), w = t.reduced.dim(3);
  const int k = config_.pool_nodes, m = k * k, n = h * w;
  t.theta = w_theta_(t.reduced);
  t.phi = w_phi_(t.reduced);

  Var skip_weights = ag::softmax(skip_proj_(ag::resize_bilinear(skip, h, w)), 1);
  t.node_feats = ag::adaptive_avg_pool(ag::mul(t.phi, skip_weights), k, k);

  Var nodes = ag::reshape(t.node_feats, {b, g, m});
  Var phi_tokens = ag::reshape(t.phi, {b, g, n});
  t.correlation = ag::softmax(ag::bmm(nodes, phi_tokens, true, false), 2);  // (B, M, N)

  Var theta_tokens = ag::reshape(t.theta, {b, g, n});
  t.graph_out = ag::reshape(reason(t.correlation, theta_tokens, adjacency_), {b, g, h, w});
  t.output = ag::add(t.reduced, w_z_(t.graph_out));
  return t;
}

Var SimilarityAggregation::forward(const Var& decoder_feat, const Var& skip) const {
  return trace(decoder_feat, skip).output;
}

}  // namespace forgerecon
