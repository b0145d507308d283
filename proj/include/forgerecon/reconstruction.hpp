#pragma once

#include <optional>

#include "forgerecon/autograd.hpp"
#include "forgerecon/encoder.hpp"
#include "forgerecon/feature_selection.hpp"
#include "forgerecon/parameters.hpp"
#include "forgerecon/similarity_aggregation.hpp"

namespace forgerecon {

// X_hat1 from the selection head, X_hat2 from the graph head. Either is
// undefined when its head is disabled.
struct ReconstructionPair {
  Var first;
  Var second;
};

struct HeadSelection {
  bool first = true;
  bool second = true;
};

// Both heads read the same (last decoder stage, F1) pair, project to RGB with
// a 1x1 conv, resize bilinearly to the input size and hard-clamp to [0,1].
class ReconstructionHeads {
 public:
  ReconstructionHeads(ParameterStore& store, const BackboneConfig& backbone, int pool_nodes, HeadSelection heads,
                      Rng& rng);

  ReconstructionPair reconstruct(const DecoderState& decoder, const FeaturePyramid& pyramid, int out_h,
                                 int out_w) const;

  // Unclamped-path pieces used by tests and visualisation.
  Var first_head(const Var& decoder_feat, const Var& skip, int out_h, int out_w) const;
  Var second_head(const Var& decoder_feat, const Var& skip, int out_h, int out_w) const;

  const HeadSelection& heads() const { return heads_; }
  const std::optional<FeatureSelection>& selection() const { return selection_; }
  const std::optional<SimilarityAggregation>& graph() const { return graph_; }
  const Conv& first_to_rgb() const { return first_rgb_; }
  const Conv& second_to_rgb() const { return second_rgb_; }

 private:
  HeadSelection heads_;
  std::optional<FeatureSelection> selection_;
  std::optional<SimilarityAggregation> graph_;
  Conv first_rgb_, second_rgb_;
};

}  // namespace forgerecon
