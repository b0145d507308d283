#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "forgerecon/model.hpp"
#include "forgerecon/tensor.hpp"
#include "forgerecon/train_config.hpp"

namespace forgerecon {

// Named-parameter container with the training config echoed as text. Each
// entry carries its shape, which doubles as the shape manifest on load.
struct Checkpoint {
  std::string config_text;
  std::map<std::string, Tensor> tensors;
};

Checkpoint capture_checkpoint(const Model& model, const TrainConfig& config);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
// Throws CheckpointError for a missing, truncated or foreign file.
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Copies tensors into the model. Throws CheckpointError listing every
// missing, unexpected or shape-mismatched parameter.
void restore_parameters(Model& model, const Checkpoint& checkpoint);

struct LoadedModel {
  TrainConfig config;
  std::unique_ptr<Model> model;
};
// Rebuilds the model from the echoed config and restores its parameters.
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace forgerecon
