#pragma once

#include <array>
#include <string>
#include <vector>

#include "forgerecon/autograd.hpp"
#include "forgerecon/encoder.hpp"
#include "forgerecon/parameters.hpp"

namespace forgerecon {

// How the channel-restoring memory unit relates to the expanding one.
enum class MemoryTying {
  tied_transpose,  // one C->4C matrix, applied transposed for 4C->C
  init_copy,       // separate 4C->C matrix initialised as the transpose copy
};

struct AttentionConfig {
  int in_channels = 0;
  int channels = 0;
  int pool_h = 1;
  int pool_w = 1;
  MemoryTying tying = MemoryTying::tied_transpose;
};

inline constexpr int kMemoryExpansion = 4;
inline constexpr double kMemoryNormEps = 1e-9;

// Deviation-from-pooled-mean features refined by a two-unit external memory:
//   F  = conv3(X)
//   D' = F - broadcast(adaptive_avg_pool(F))
//   T  = softmax over memory(M D'_tokens), then normalised over tokens
//   D  = conv1(M^T T) + F
class DiscrepancyAttention {
 public:
  DiscrepancyAttention(ParameterStore& store, const std::string& name, const AttentionConfig& config, Rng& rng);

  Var forward(const Var& x) const;

  const AttentionConfig& config() const { return config_; }
  const Conv& conv3() const { return conv3_; }
  const Conv& conv1() const { return conv1_; }
  const Var& memory() const { return memory_; }
  // Undefined unless tying == init_copy.
  const Var& memory_out() const { return memory_out_; }

 private:
  AttentionConfig config_;
  Conv conv3_;
  Var memory_;      // (4C, C)
  Var memory_out_;  // (C, 4C) when untied
  Conv conv1_;
};

// D1 = A1(F1); D_i = A_i(concat(resize(D_{i-1} to F_i), F_i)) for i = 2..4.
class AttentionCascade {
 public:
  AttentionCascade(ParameterStore& store, const BackboneConfig& backbone, int pool_size, MemoryTying tying, Rng& rng);

  // Fills pyramid.D from pyramid.F[0..3].
  void apply(FeaturePyramid& pyramid) const;

  const std::vector<DiscrepancyAttention>& blocks() const { return blocks_; }

 private:
  std::vector<DiscrepancyAttention> blocks_;
};

}  // namespace forgerecon
