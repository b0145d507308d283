#include "forgerecon/model.hpp"

#include "forgerecon/errors.hpp"
#include "forgerecon/ops.hpp"

namespace forgerecon {

std::string to_string(Ablation ablation) {
  switch (ablation) {
    case Ablation::baseline: return "baseline";
    case Ablation::rec1: return "rec1";
    case Ablation::rec2: return "rec2";
    case Ablation::double_head: return "double";
    case Ablation::no_attention: return "no-dea";
    case Ablation::no_aggregation: return "no-rfa";
    case Ablation::full: return "full";
  }
  return "full";
}

Ablation parse_ablation(const std::string& name) {
  if (name == "baseline") return Ablation::baseline;
  if (name == "rec1") return Ablation::rec1;
  if (name == "rec2") return Ablation::rec2;
  if (name == "double") return Ablation::double_head;
  if (name == "no-dea") return Ablation::no_attention;
  if (name == "no-rfa") return Ablation::no_aggregation;
  if (name == "full") return Ablation::full;
  throw ConfigError("unknown ablation '" + name + "' (expected baseline, rec1, rec2, double, no-dea, no-rfa, full)");
}

ComponentFlags ComponentFlags::from(Ablation ablation) {
  ComponentFlags f;
  switch (ablation) {
    case Ablation::baseline:
      return {false, false, false, false, false, false};
    case Ablation::rec1:
      return {true, true, false, false, false, true};
    case Ablation::rec2:
      return {true, false, true, false, false, true};
    case Ablation::double_head:
      return {true, true, true, false, false, true};
    case Ablation::no_attention:
      return {true, true, true, false, true, true};
    case Ablation::no_aggregation:
      return {true, true, true, true, false, true};
    case Ablation::full:
      return f;
  }
  return f;
}

void ModelConfig::validate() const {
  backbone.validate();
  if (attention_pool <= 0) throw ConfigError("attention_pool must be positive");
  if (graph_nodes <= 0) throw EmptyInputError("graph_nodes must be positive");
}

std::vector<int> ModelOutputs::predictions() const {
  const Tensor& l = logits.value();
  std::vector<int> out(l.dim(0));
  for (int b = 0; b < l.dim(0); ++b) out[b] = l[b * 2 + 1] > l[b * 2] ? 1 : 0;
  return out;
}

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config), flags_(ComponentFlags::from(config.ablation)) {
  config_.validate();
  Rng rng(seed);
  encoder_ = std::make_unique<Encoder>(store_, config_.backbone, rng);
  const auto& ch = config_.backbone.stage_channels;
  if (flags_.attention) {
    attention_.emplace(store_, config_.backbone, config_.attention_pool, config_.tying, rng);
    fusion_.emplace(store_, config_.backbone, rng);
  }
  if (flags_.decoder) {
    decoder_.emplace(store_, config_.backbone, rng);
    heads_.emplace(store_, config_.backbone, config_.graph_nodes,
                   HeadSelection{flags_.first_head, flags_.second_head}, rng);
    const int active = static_cast<int>(flags_.first_head) + static_cast<int>(flags_.second_head);
    for (int k = 0; k < active; ++k) {
      const std::string name = "detector.branch" + std::to_string(k + 1);
      if (flags_.aggregation) {
        aggregations_.emplace_back(store_, name, ch[4], ch[4], rng);
      } else {
        additions_.emplace_back(store_, name, ch[4], rng);
      }
    }
  }
  classifier_ = std::make_unique<Classifier>(store_, "classifier", ch[4], rng);
}

ModelOutputs Model::forward(const Var& images) const {
  ModelOutputs out;
  out.pyramid = encoder_->encode(images);
  const Var& f5 = out.pyramid.F[4];
  if (flags_.metric) out.pooled_f5 = ag::global_avg_pool(f5);
  if (!flags_.decoder) {
    out.encoding = f5;
    out.branches = {f5};
    out.logits = classifier_->classify(out.branches);
    return out;
  }
  if (attention_) attention_->apply(out.pyramid);
  out.decoder = decoder_->decode(out.pyramid);
  out.recon = heads_->reconstruct(out.decoder, out.pyramid, images.dim(2), images.dim(3));
  out.encoding = fusion_ ? fusion_->fuse(out.pyramid.D[3], f5) : f5;

  std::vector<Var> masks;
  if (out.recon.first.defined()) {
    out.mask1 = difference_mask(images, out.recon.first);
    masks.push_back(out.mask1);
  }
  if (out.recon.second.defined()) {
    out.mask2 = difference_mask(images, out.recon.second);
    masks.push_back(out.mask2);
  }
  for (std::size_t k = 0; k < masks.size(); ++k) {
    out.branches.push_back(flags_.aggregation ? aggregations_[k].forward(masks[k], out.encoding)
                                              : additions_[k].forward(masks[k], out.encoding));
  }
  out.logits = classifier_->classify(out.branches);
  return out;
}

}  // namespace forgerecon
