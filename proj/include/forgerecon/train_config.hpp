#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "forgerecon/encoder.hpp"
#include "forgerecon/losses.hpp"
#include "forgerecon/model.hpp"

namespace forgerecon {

struct TrainConfig {
  int batch_size = 32;
  double lr = 1e-4;
  double weight_decay = 1e-5;
  double lr_gamma = 0.5;
  int lr_step_epochs = 5;
  int epochs = 5;
  std::uint64_t seed = 0;
  LossWeights loss_weights;
  BackboneConfig backbone;

  // Model and run options beyond the optimisation recipe.
  Ablation ablation = Ablation::full;
  int attention_pool = 1;
  int graph_nodes = 2;
  MemoryTying memory_tying = MemoryTying::tied_transpose;
  ReconstructionNorm reconstruction_norm = ReconstructionNorm::squared;
  bool augment = true;
  int eval_batch_size = 64;
  int max_steps = 0;  // stop after this many optimiser steps; 0 runs all epochs

  void validate() const;
  ModelConfig model_config() const;
};

// Text format: `key = value` lines, `[section]` headers for loss_weights and
// backbone, `#` comments, strings quoted, lists in brackets. Keys are the
// TrainConfig field names. Unknown keys are a ConfigError.
TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::filesystem::path& path);
// Round-trips through parse_train_config.
std::string format_train_config(const TrainConfig& config);

// Learning rate in effect during a zero-based epoch.
double scheduled_lr(const TrainConfig& config, int epoch);

std::string to_string(MemoryTying tying);
MemoryTying parse_memory_tying(const std::string& name);
std::string to_string(ReconstructionNorm norm);
ReconstructionNorm parse_reconstruction_norm(const std::string& name);

}  // namespace forgerecon
