#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "forgerecon/detector.hpp"
#include "forgerecon/discrepancy_attention.hpp"
#include "forgerecon/encoder.hpp"
#include "forgerecon/feature_selection.hpp"
#include "forgerecon/parameters.hpp"
#include "forgerecon/reconstruction.hpp"

namespace forgerecon {

// Component subsets, one per ablation row:
//   baseline  encoder + GAP classifier
//   rec1      + decoder + selection reconstruction head
//   rec2      + decoder + graph reconstruction head
//   double    + both heads
//   no-rfa    double + discrepancy attention, masks added instead of aggregated
//   no-dea    double + mask-guided aggregation
//   full      everything
enum class Ablation { baseline, rec1, rec2, double_head, no_attention, no_aggregation, full };

std::string to_string(Ablation ablation);
Ablation parse_ablation(const std::string& name);

struct ComponentFlags {
  bool decoder = true;
  bool first_head = true;
  bool second_head = true;
  bool attention = true;
  bool aggregation = true;
  bool metric = true;

  static ComponentFlags from(Ablation ablation);
};

struct ModelConfig {
  BackboneConfig backbone;
  int attention_pool = 1;
  int graph_nodes = 2;
  MemoryTying tying = MemoryTying::tied_transpose;
  Ablation ablation = Ablation::full;

  void validate() const;
};

struct ModelOutputs {
  Var logits;  // (B, 2); column 1 is the fake logit
  ReconstructionPair recon;
  FeaturePyramid pyramid;
  DecoderState decoder;
  Var encoding;    // F_e
  Var mask1;       // |X - X_hat1|
  Var mask2;       // |X - X_hat2|
  Var pooled_f5;   // GAP(F5), (B, C5); undefined when the metric loss is off
  std::vector<Var> branches;

  std::vector<int> predictions() const;  // argmax of logits
};

class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  // images: (B, 3, H, W) in [0, 1].
  ModelOutputs forward(const Var& images) const;

  const ModelConfig& config() const { return config_; }
  const ComponentFlags& flags() const { return flags_; }
  ParameterStore& parameters() { return store_; }
  const ParameterStore& parameters() const { return store_; }

  const Encoder& encoder() const { return *encoder_; }
  const std::optional<AttentionCascade>& attention() const { return attention_; }
  const std::optional<Decoder>& decoder() const { return decoder_; }
  const std::optional<ReconstructionHeads>& heads() const { return heads_; }
  const std::optional<EncodingFusion>& fusion() const { return fusion_; }
  const std::vector<FeatureAggregation>& aggregations() const { return aggregations_; }
  const Classifier& classifier() const { return *classifier_; }

 private:
  ModelConfig config_;
  ComponentFlags flags_;
  ParameterStore store_;
  std::unique_ptr<Encoder> encoder_;
  std::optional<AttentionCascade> attention_;
  std::optional<Decoder> decoder_;
  std::optional<ReconstructionHeads> heads_;
  std::optional<EncodingFusion> fusion_;
  std::vector<FeatureAggregation> aggregations_;  // one per active head
  std::vector<MaskAddition> additions_;
  std::unique_ptr<Classifier> classifier_;
};

}  // namespace forgerecon
