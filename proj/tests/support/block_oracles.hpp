#pragma once

// Loop-level restatements of the network blocks, built on the naive kernels
// only. Each reads the block's parameters but none of its forward code.

#include "forgerecon/detector.hpp"
#include "forgerecon/discrepancy_attention.hpp"
#include "forgerecon/feature_selection.hpp"
#include "forgerecon/similarity_aggregation.hpp"

namespace forgerecon::testing {

Tensor naive_conv(const Conv& c, const Tensor& x);
Tensor naive_sep(const SeparableConv& s, const Tensor& x);

Tensor attention_oracle(const DiscrepancyAttention& blk, const Tensor& x);
Tensor selection_oracle(const FeatureSelection& fs, const Tensor& prev, const Tensor& skip);
Tensor graph_head_oracle(const SimilarityAggregation& sam, const Tensor& dec, const Tensor& skip);
Tensor aggregation_oracle(const FeatureAggregation& rfa, const Tensor& mask, const Tensor& encoding);
Tensor classifier_oracle(const Classifier& cls, const std::vector<Tensor>& branches);

}  // namespace forgerecon::testing
