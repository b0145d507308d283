#include "forgerecon/encoder.hpp"

#include "forgerecon/errors.hpp"
#include "forgerecon/ops.hpp"

namespace forgerecon {

std::string to_string(BackbonePreset preset) {
  return preset == BackbonePreset::tiny ? "tiny" : "xception_like";
}

BackbonePreset parse_backbone_preset(const std::string& name) {
  if (name == "tiny") return BackbonePreset::tiny;
  if (name == "xception_like") return BackbonePreset::xception_like;
  throw ConfigError("unknown backbone preset '" + name + "' (expected tiny or xception_like)");
}

BackboneConfig BackboneConfig::tiny(int input_size) {
  BackboneConfig c;
  c.input_h = c.input_w = input_size;
  return c;
}

// Tap points: F1..F3 after entry-flow blocks 1-3, F4 after the middle flow,
// F5 after the exit flow. The stem (two 3x3 convs, the first strided) plus
// entry block 1 account for the stride of 4 before F1.
BackboneConfig BackboneConfig::xception_like(int input_size) {
  BackboneConfig c;
  c.preset = BackbonePreset::xception_like;
  c.stage_channels = {128, 256, 728, 728, 2048};
  c.stage_strides = {4, 2, 2, 1, 2};
  c.input_h = c.input_w = input_size;
  return c;
}

void BackboneConfig::validate() const {
  if (stage_channels.size() != 5) {
    throw ConfigError("backbone needs exactly 5 stage channels, got " + std::to_string(stage_channels.size()));
  }
  if (stage_strides.size() != 5) {
    throw ConfigError("backbone needs exactly 5 stage strides, got " + std::to_string(stage_strides.size()));
  }
  for (int c : stage_channels) {
    if (c <= 0) throw ConfigError("stage channels must be positive");
  }
  for (int s : stage_strides) {
    if (s < 1) throw ConfigError("stage strides must be >= 1");
  }
  if (input_h <= 0 || input_w <= 0) throw ConfigError("input size must be positive");
  if (preset == BackbonePreset::tiny) {
    int cumulative = 1;
    for (int s : stage_strides) cumulative *= s;
    if (input_h % cumulative != 0 || input_w % cumulative != 0) {
      throw ConfigError("input size " + std::to_string(input_h) + "x" + std::to_string(input_w) +
                        " is not divisible by the cumulative stride " + std::to_string(cumulative));
    }
  } else {
    if (stage_strides != std::vector<int>{4, 2, 2, 1, 2}) {
      throw ConfigError("xception_like topology fixes stage strides to [4,2,2,1,2]");
    }
    if (stage_channels[4] % 4 != 0) throw ConfigError("xception_like exit channels must be divisible by 4");
    if (middle_blocks < 0) throw ConfigError("middle_blocks must be >= 0");
  }
}

std::array<std::pair<int, int>, 5> BackboneConfig::stage_sizes() const {
  std::array<std::pair<int, int>, 5> sizes;
  int h = input_h, w = input_w;
  for (int i = 0; i < 5; ++i) {
    // Every stride-s 3x3 conv with padding 1 maps n to ceil(n / s); the
    // xception_like stride of 4 is two successive stride-2 convs.
    int s = stage_strides[i];
    while (s > 1 && s % 2 == 0 && preset == BackbonePreset::xception_like) {
      h = kernels::conv_out_size(h, 3, 2, 1);
      w = kernels::conv_out_size(w, 3, 2, 1);
      s /= 2;
    }
    h = kernels::conv_out_size(h, 3, s, 1);
    w = kernels::conv_out_size(w, 3, s, 1);
    sizes[i] = {h, w};
  }
  return sizes;
}

Encoder::Encoder(ParameterStore& store, const BackboneConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const auto& ch = config_.stage_channels;
  if (config_.preset == BackbonePreset::tiny) {
    int in = 3;
    for (int i = 0; i < 5; ++i) {
      const std::string name = "encoder.stage" + std::to_string(i + 1);
      Stage st;
      st.convs.push_back(make_conv(store, name + ".conv1",
                                   {.in_channels = in, .out_channels = ch[i], .kernel = 3,
                                    .stride = config_.stage_strides[i], .bias = false},
                                   rng));
      st.norms.push_back(make_group_norm(store, name + ".norm1", ch[i]));
      st.convs.push_back(make_conv(
          store, name + ".conv2", {.in_channels = ch[i], .out_channels = ch[i], .kernel = 3, .bias = false}, rng));
      st.norms.push_back(make_group_norm(store, name + ".norm2", ch[i]));
      stages_.push_back(std::move(st));
      in = ch[i];
    }
    return;
  }

  stem_.push_back(make_conv(store, "encoder.stem.conv1", {.in_channels = 3, .out_channels = 32, .stride = 2}, rng));
  stem_.push_back(make_conv(store, "encoder.stem.conv2", {.in_channels = 32, .out_channels = 64}, rng));
  int in = 64;
  for (int i = 0; i < 3; ++i) {
    const std::string name = "encoder.entry" + std::to_string(i + 1);
    XceptionBlock b;
    b.seps.push_back(make_separable(store, name + ".sep1", in, ch[i], 1, rng));
    b.seps.push_back(make_separable(store, name + ".sep2", ch[i], ch[i], 2, rng));
    b.shortcut = make_conv(store, name + ".shortcut",
                           {.in_channels = in, .out_channels = ch[i], .kernel = 1, .stride = 2, .bias = false}, rng);
    entry_.push_back(std::move(b));
    in = ch[i];
  }
  if (ch[3] != ch[2]) {
    XceptionBlock proj;
    proj.seps.push_back(make_separable(store, "encoder.middle_proj.sep1", in, ch[3], 1, rng));
    proj.shortcut =
        make_conv(store, "encoder.middle_proj.shortcut", {.in_channels = in, .out_channels = ch[3], .kernel = 1}, rng);
    middle_.push_back(std::move(proj));
    in = ch[3];
  }
  for (int i = 0; i < config_.middle_blocks; ++i) {
    const std::string name = "encoder.middle" + std::to_string(i + 1);
    XceptionBlock b;
    for (int k = 0; k < 3; ++k) b.seps.push_back(make_separable(store, name + ".sep" + std::to_string(k + 1), in, in, 1, rng));
    middle_.push_back(std::move(b));
  }
  const int exit_mid = ch[4] / 2;
  exit_block_.seps.push_back(make_separable(store, "encoder.exit.sep1", in, in, 1, rng));
  exit_block_.seps.push_back(make_separable(store, "encoder.exit.sep2", in, exit_mid, 2, rng));
  exit_block_.shortcut = make_conv(
      store, "encoder.exit.shortcut", {.in_channels = in, .out_channels = exit_mid, .kernel = 1, .stride = 2, .bias = false},
      rng);
  exit_tail_.push_back(make_separable(store, "encoder.exit.tail1", exit_mid, 3 * ch[4] / 4, 1, rng));
  exit_tail_.push_back(make_separable(store, "encoder.exit.tail2", 3 * ch[4] / 4, ch[4], 1, rng));
}

Var Encoder::run_tiny_stage(const Stage& stage, const Var& x) const {
  Var h = x;
  for (std::size_t i = 0; i < stage.convs.size(); ++i) h = ag::relu(stage.norms[i](stage.convs[i](h)));
  return h;
}

// y = relu(shortcut(x) + sep_n(...relu(sep_1(x))))
Var Encoder::run_block(const XceptionBlock& block, const Var& x) const {
  Var h = x;
  for (std::size_t i = 0; i < block.seps.size(); ++i) {
    if (i > 0) h = ag::relu(h);
    h = block.seps[i](h);
  }
  Var skip = block.shortcut ? (*block.shortcut)(x) : x;
  return ag::relu(ag::add(h, skip));
}

FeaturePyramid Encoder::encode(const Var& images) const {
  const Shape& s = images.shape();
  if (s.size() != 4 || s[1] != 3 || s[2] != config_.input_h || s[3] != config_.input_w) {
    throw ConfigError("encoder expects input (B,3," + std::to_string(config_.input_h) + "," +
                      std::to_string(config_.input_w) + "), got " + shape_str(s));
  }
  FeaturePyramid p;
  if (config_.preset == BackbonePreset::tiny) {
    Var h = images;
    for (int i = 0; i < 5; ++i) {
      h = run_tiny_stage(stages_[i], h);
      p.F[i] = h;
    }
    return p;
  }
  Var h = images;
  for (const Conv& c : stem_) h = ag::relu(c(h));
  for (int i = 0; i < 3; ++i) {
    h = run_block(entry_[i], h);
    p.F[i] = h;
  }
  for (const XceptionBlock& b : middle_) h = run_block(b, h);
  p.F[3] = h;
  h = run_block(exit_block_, h);
  for (const SeparableConv& sep : exit_tail_) h = ag::relu(sep(h));
  p.F[4] = h;
  return p;
}

}  // namespace forgerecon
