#include "forgerecon/discrepancy_attention.hpp"

#include "forgerecon/errors.hpp"
#include "forgerecon/ops.hpp"

namespace forgerecon {

namespace {

Tensor transposed(const Tensor& m) {
  Tensor t({m.dim(1), m.dim(0)});
  for (int i = 0; i < m.dim(0); ++i)
    for (int j = 0; j < m.dim(1); ++j) t[static_cast<std::size_t>(j) * m.dim(0) + i] = m[static_cast<std::size_t>(i) * m.dim(1) + j];
  return t;
}

}  // namespace

DiscrepancyAttention::DiscrepancyAttention(ParameterStore& store, const std::string& name,
                                           const AttentionConfig& config, Rng& rng)
    : config_(config) {
  if (config.in_channels <= 0 || config.channels <= 0) throw ConfigError(name + ": channels must be positive");
  if (config.pool_h <= 0 || config.pool_w <= 0) throw ConfigError(name + ": pool size must be positive");
  const int c = config.channels;
  conv3_ = make_conv(store, name + ".conv3", {.in_channels = config.in_channels, .out_channels = c, .kernel = 3}, rng);
  memory_ = store.add(name + ".memory", he_normal({kMemoryExpansion * c, c}, c, rng));
  if (config.tying == MemoryTying::init_copy) {
    memory_out_ = store.add(name + ".memory_out", transposed(memory_.value()));
  }
  conv1_ = make_conv(store, name + ".conv1", {.in_channels = c, .out_channels = c, .kernel = 1}, rng);
}

Var DiscrepancyAttention::forward(const Var& x) const {
  const Shape& s = x.shape();
  if (s.size() != 4) throw ShapeError("discrepancy attention expects rank-4 input, got " + shape_str(s));
  if (s[2] * s[3] == 0) throw EmptyInputError("discrepancy attention on empty spatial extent " + shape_str(s));
  if (s[1] != config_.in_channels) {
    throw ConfigError("discrepancy attention expects " + std::to_string(config_.in_channels) +
                      " input channels, got " + shape_str(s));
  }
  const int b = s[0], c = config_.channels, h = s[2], w = s[3];
  Var f = conv3_(x);
  Var pooled = ag::adaptive_avg_pool(f, config_.pool_h, config_.pool_w);
  Var deviation = ag::sub(f, ag::broadcast_cells(pooled, h, w));
  Var tokens = ag::reshape(deviation, {b, c, h * w});
  Var attn = ag::bmm(memory_, tokens);                        // (B, 4C, N)
  attn = ag::softmax(attn, 1);                                // over memory slots
  attn = ag::sum_normalize(attn, 2, kMemoryNormEps);          // over tokens
  Var restored = config_.tying == MemoryTying::tied_transpose ? ag::bmm(memory_, attn, true, false)
                                                              : ag::bmm(memory_out_, attn);  // (B, C, N)
  Var out = conv1_(ag::reshape(restored, {b, c, h, w}));
  return ag::add(out, f);
}

AttentionCascade::AttentionCascade(ParameterStore& store, const BackboneConfig& backbone, int pool_size,
                                   MemoryTying tying, Rng& rng) {
  const auto& ch = backbone.stage_channels;
  for (int i = 0; i < 4; ++i) {
    AttentionConfig cfg;
    cfg.in_channels = i == 0 ? ch[0] : ch[i - 1] + ch[i];
    cfg.channels = ch[i];
    cfg.pool_h = cfg.pool_w = pool_size;
    cfg.tying = tying;
    blocks_.emplace_back(store, "attention" + std::to_string(i + 1), cfg, rng);
  }
}

void AttentionCascade::apply(FeaturePyramid& pyramid) const {
  for (int i = 0; i < 4; ++i) {
    const Var& fi = pyramid.F[i];
    if (!fi.defined()) throw ConfigError("attention cascade needs F1..F4");
    if (i == 0) {
      pyramid.D[0] = blocks_[0].forward(fi);
    } else {
      Var prev = ag::resize_bilinear(pyramid.D[i - 1], fi.dim(2), fi.dim(3));
      pyramid.D[i] = blocks_[i].forward(ag::concat_channels({prev, fi}));
    }
  }
  pyramid.has_attention = true;
}

}  // namespace forgerecon
