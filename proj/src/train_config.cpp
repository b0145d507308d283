#include "forgerecon/train_config.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "forgerecon/errors.hpp"

namespace forgerecon {
namespace {

using Inputs = std::vector<std::string>;

const std::string& single(const std::string& key, const Inputs& in) {
  if (in.size() != 1) throw ConfigError("config key '" + key + "' expects one value");
  return in[0];
}

template <typename T>
T parse_number(const std::string& key, const Inputs& in) {
  const std::string& s = single(key, in);
  T value{};
  if (!CLI::detail::lexical_conversion<T, T>({s}, value)) {
    throw ConfigError("config key '" + key + "' has invalid value '" + s + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const Inputs& in) {
  const std::string& s = single(key, in);
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError("config key '" + key + "' expects true or false, got '" + s + "'");
}

std::vector<int> parse_int_list(const std::string& key, const Inputs& in) {
  std::vector<int> out;
  for (const std::string& s : in) out.push_back(parse_number<int>(key, {s}));
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s + "]";
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string to_string(MemoryTying tying) {
  return tying == MemoryTying::tied_transpose ? "tied_transpose" : "init_copy";
}

MemoryTying parse_memory_tying(const std::string& name) {
  if (name == "tied_transpose") return MemoryTying::tied_transpose;
  if (name == "init_copy") return MemoryTying::init_copy;
  throw ConfigError("unknown memory_tying '" + name + "' (expected tied_transpose or init_copy)");
}

std::string to_string(ReconstructionNorm norm) { return norm == ReconstructionNorm::squared ? "squared" : "absolute"; }

ReconstructionNorm parse_reconstruction_norm(const std::string& name) {
  if (name == "squared") return ReconstructionNorm::squared;
  if (name == "absolute") return ReconstructionNorm::absolute;
  throw ConfigError("unknown reconstruction_norm '" + name + "' (expected squared or absolute)");
}

void TrainConfig::validate() const {
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (eval_batch_size <= 0) throw ConfigError("eval_batch_size must be positive");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be a finite non-negative number");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  if (!(lr_gamma > 0.0)) throw ConfigError("lr_gamma must be positive");
  if (lr_step_epochs <= 0) throw ConfigError("lr_step_epochs must be positive");
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (max_steps < 0) throw ConfigError("max_steps must be non-negative");
  for (double l : {loss_weights.lambda1, loss_weights.lambda2, loss_weights.lambda3}) {
    if (!(l >= 0.0)) throw ConfigError("loss weights must be non-negative");
  }
  model_config().validate();
}

ModelConfig TrainConfig::model_config() const {
  ModelConfig m;
  m.backbone = backbone;
  m.attention_pool = attention_pool;
  m.graph_nodes = graph_nodes;
  m.tying = memory_tying;
  m.ablation = ablation;
  return m;
}

TrainConfig parse_train_config(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }

  bool backbone_preset_seen = false;
  std::map<std::string, Inputs> backbone_keys;
  using Setter = std::function<void(const std::string&, const Inputs&)>;
  const std::map<std::string, Setter> top{
      {"batch_size", [&](auto& k, auto& v) { cfg.batch_size = parse_number<int>(k, v); }},
      {"lr", [&](auto& k, auto& v) { cfg.lr = parse_number<double>(k, v); }},
      {"weight_decay", [&](auto& k, auto& v) { cfg.weight_decay = parse_number<double>(k, v); }},
      {"lr_gamma", [&](auto& k, auto& v) { cfg.lr_gamma = parse_number<double>(k, v); }},
      {"lr_step_epochs", [&](auto& k, auto& v) { cfg.lr_step_epochs = parse_number<int>(k, v); }},
      {"epochs", [&](auto& k, auto& v) { cfg.epochs = parse_number<int>(k, v); }},
      {"seed", [&](auto& k, auto& v) { cfg.seed = parse_number<std::uint64_t>(k, v); }},
      {"ablation", [&](auto& k, auto& v) { cfg.ablation = parse_ablation(single(k, v)); }},
      {"attention_pool", [&](auto& k, auto& v) { cfg.attention_pool = parse_number<int>(k, v); }},
      {"graph_nodes", [&](auto& k, auto& v) { cfg.graph_nodes = parse_number<int>(k, v); }},
      {"memory_tying", [&](auto& k, auto& v) { cfg.memory_tying = parse_memory_tying(single(k, v)); }},
      {"reconstruction_norm",
       [&](auto& k, auto& v) { cfg.reconstruction_norm = parse_reconstruction_norm(single(k, v)); }},
      {"augment", [&](auto& k, auto& v) { cfg.augment = parse_bool(k, v); }},
      {"eval_batch_size", [&](auto& k, auto& v) { cfg.eval_batch_size = parse_number<int>(k, v); }},
      {"max_steps", [&](auto& k, auto& v) { cfg.max_steps = parse_number<int>(k, v); }},
  };
  const std::map<std::string, Setter> weights{
      {"lambda1", [&](auto& k, auto& v) { cfg.loss_weights.lambda1 = parse_number<double>(k, v); }},
      {"lambda2", [&](auto& k, auto& v) { cfg.loss_weights.lambda2 = parse_number<double>(k, v); }},
      {"lambda3", [&](auto& k, auto& v) { cfg.loss_weights.lambda3 = parse_number<double>(k, v); }},
  };

  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    const std::string key = item.fullname();
    if (item.parents.empty()) {
      auto it = top.find(item.name);
      if (it == top.end()) throw ConfigError("unknown config key '" + key + "'");
      it->second(key, item.inputs);
    } else if (item.parents.size() == 1 && item.parents[0] == "loss_weights") {
      auto it = weights.find(item.name);
      if (it == weights.end()) throw ConfigError("unknown config key '" + key + "'");
      it->second(key, item.inputs);
    } else if (item.parents.size() == 1 && item.parents[0] == "backbone") {
      if (item.name == "preset") backbone_preset_seen = true;
      backbone_keys[item.name] = item.inputs;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  // The preset supplies defaults that the remaining backbone keys override.
  if (backbone_preset_seen) {
    const BackbonePreset preset = parse_backbone_preset(single("backbone.preset", backbone_keys["preset"]));
    cfg.backbone = preset == BackbonePreset::tiny ? BackboneConfig::tiny() : BackboneConfig::xception_like();
  }
  for (const auto& [name, v] : backbone_keys) {
    const std::string key = "backbone." + name;
    if (name == "preset") continue;
    if (name == "input_size") {
      cfg.backbone.input_h = cfg.backbone.input_w = parse_number<int>(key, v);
    } else if (name == "input_h") {
      cfg.backbone.input_h = parse_number<int>(key, v);
    } else if (name == "input_w") {
      cfg.backbone.input_w = parse_number<int>(key, v);
    } else if (name == "stage_channels") {
      cfg.backbone.stage_channels = parse_int_list(key, v);
    } else if (name == "stage_strides") {
      cfg.backbone.stage_strides = parse_int_list(key, v);
    } else if (name == "middle_blocks") {
      cfg.backbone.middle_blocks = parse_number<int>(key, v);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_train_config(ss.str());
}

std::string format_train_config(const TrainConfig& c) {
  std::ostringstream os;
  os << "batch_size = " << c.batch_size << "\n"
     << "lr = " << fmt_double(c.lr) << "\n"
     << "weight_decay = " << fmt_double(c.weight_decay) << "\n"
     << "lr_gamma = " << fmt_double(c.lr_gamma) << "\n"
     << "lr_step_epochs = " << c.lr_step_epochs << "\n"
     << "epochs = " << c.epochs << "\n"
     << "seed = " << c.seed << "\n"
     << "ablation = \"" << to_string(c.ablation) << "\"\n"
     << "attention_pool = " << c.attention_pool << "\n"
     << "graph_nodes = " << c.graph_nodes << "\n"
     << "memory_tying = \"" << to_string(c.memory_tying) << "\"\n"
     << "reconstruction_norm = \"" << to_string(c.reconstruction_norm) << "\"\n"
     << "augment = " << (c.augment ? "true" : "false") << "\n"
     << "eval_batch_size = " << c.eval_batch_size << "\n"
     << "max_steps = " << c.max_steps << "\n\n"
     << "[loss_weights]\n"
     << "lambda1 = " << fmt_double(c.loss_weights.lambda1) << "\n"
     << "lambda2 = " << fmt_double(c.loss_weights.lambda2) << "\n"
     << "lambda3 = " << fmt_double(c.loss_weights.lambda3) << "\n\n"
     << "[backbone]\n"
     << "preset = \"" << to_string(c.backbone.preset) << "\"\n"
     << "input_h = " << c.backbone.input_h << "\n"
     << "input_w = " << c.backbone.input_w << "\n"
     << "stage_channels = " << join(c.backbone.stage_channels) << "\n"
     << "stage_strides = " << join(c.backbone.stage_strides) << "\n"
     << "middle_blocks = " << c.backbone.middle_blocks << "\n";
  return os.str();
}

double scheduled_lr(const TrainConfig& config, int epoch) {
  return config.lr * std::pow(config.lr_gamma, epoch / config.lr_step_epochs);
}

}  // namespace forgerecon
