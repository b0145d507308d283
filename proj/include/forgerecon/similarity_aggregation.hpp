#pragma once

#include <string>

#include "forgerecon/autograd.hpp"
#include "forgerecon/parameters.hpp"

namespace forgerecon {

inline constexpr int kGraphChannels = 16;

struct GraphHeadConfig {
  int decoder_channels = 0;  // channels of the last decoder stage
  int skip_channels = 0;     // channels of F1
  int pool_nodes = 2;        // node grid side k; the graph has k*k nodes
};

// Intermediates of the graph-reasoning head, kept for tests.
struct GraphTrace {
  Var reduced;      // W_rho(decoder)        (B,16,h,w)
  Var theta;        // (B,16,h,w)
  Var phi;          // (B,16,h,w)
  Var node_feats;   // pooled weighted phi   (B,16,k,k)
  Var correlation;  // pixel-to-node softmax (B,M,N), rows sum to 1
  Var graph_out;    // G'                    (B,16,h,w)
  Var output;       // G                     (B,16,h,w)
};

// Pixel-to-node similarity aggregation with one graph-reasoning layer:
//   R = W_rho(X); theta = W_theta(R); phi = W_phi(R)
//   nodes = pool_k(phi * softmax_c(proj(resize(F1))))                 (M x 16)
//   C = softmax_rows(nodes phi^T)                                     (M x N)
//   G' = C^T relu((I - A) (C theta^T) W_c^T)                          (N x 16)
//   G = R + W_z(G')
class SimilarityAggregation {
 public:
  SimilarityAggregation(ParameterStore& store, const std::string& name, const GraphHeadConfig& config, Rng& rng);

  Var forward(const Var& decoder_feat, const Var& skip) const;
  GraphTrace trace(const Var& decoder_feat, const Var& skip) const;

  // The graph layer alone: node features (B,M,16), correlation (B,M,N) and
  // theta tokens (B,16,N) -> G' tokens (B,16,N). `adjacency` is (M,M).
  Var reason(const Var& correlation, const Var& theta_tokens, const Var& adjacency) const;

  const GraphHeadConfig& config() const { return config_; }
  const Conv& w_rho() const { return w_rho_; }
  const Conv& w_theta() const { return w_theta_; }
  const Conv& w_phi() const { return w_phi_; }
  const Conv& w_z() const { return w_z_; }
  const Conv& skip_proj() const { return skip_proj_; }
  const Var& adjacency() const { return adjacency_; }
  const Var& channel_mix() const { return channel_mix_; }

 private:
  GraphHeadConfig config_;
  Conv w_rho_, w_theta_, w_phi_, w_z_;
  Conv skip_proj_;
  Var adjacency_;    // (M, M) node-axis 1D conv
  Var channel_mix_;  // (16, 16) channel-axis 1D conv
};

}  // namespace forgerecon
