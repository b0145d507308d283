#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "forgerecon/autograd.hpp"
#include "forgerecon/parameters.hpp"

namespace forgerecon {

enum class BackbonePreset { tiny, xception_like };

std::string to_string(BackbonePreset preset);
BackbonePreset parse_backbone_preset(const std::string& name);

struct BackboneConfig {
  BackbonePreset preset = BackbonePreset::tiny;
  std::vector<int> stage_channels{16, 32, 64, 128, 256};
  int input_h = 64;
  int input_w = 64;
  std::vector<int> stage_strides{2, 2, 2, 2, 1};
  // Repeats of the identity-residual middle-flow block (xception_like only).
  int middle_blocks = 8;

  static BackboneConfig tiny(int input_size = 64);
  static BackboneConfig xception_like(int input_size = 299);

  // Throws ConfigError on a malformed configuration.
  void validate() const;

  // Spatial size (h, w) of F1..F5 for this configuration.
  std::array<std::pair<int, int>, 5> stage_sizes() const;
};

// F1..F5 from the backbone plus the optional discrepancy-attention outputs
// D1..D4, each aligned to the matching F_i.
struct FeaturePyramid {
  std::array<Var, 5> F;
  std::array<Var, 4> D;
  bool has_attention = false;
};

class Encoder {
 public:
  Encoder(ParameterStore& store, const BackboneConfig& config, Rng& rng);

  // images: (B, 3, H, W) with H, W equal to the configured input size.
  FeaturePyramid encode(const Var& images) const;

  const BackboneConfig& config() const { return config_; }

 private:
  struct Stage {
    std::vector<Conv> convs;  // bias-free 3x3 convs
    std::vector<GroupNorm> norms;  // one per conv, applied before the ReLU
  };
  struct XceptionBlock {
    std::vector<SeparableConv> seps;
    std::optional<Conv> shortcut;  // strided 1x1 projection; identity when absent
  };

  Var run_tiny_stage(const Stage& stage, const Var& x) const;
  Var run_block(const XceptionBlock& block, const Var& x) const;

  BackboneConfig config_;
  std::vector<Stage> stages_;

  // xception_like topology.
  std::vector<Conv> stem_;
  std::vector<XceptionBlock> entry_;
  std::vector<XceptionBlock> middle_;
  XceptionBlock exit_block_;
  std::vector<SeparableConv> exit_tail_;
};

}  // namespace forgerecon
