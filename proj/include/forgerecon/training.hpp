#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "forgerecon/checkpoint.hpp"
#include "forgerecon/dataset.hpp"
#include "forgerecon/losses.hpp"
#include "forgerecon/metrics.hpp"
#include "forgerecon/model.hpp"
#include "forgerecon/perturb.hpp"
#include "forgerecon/train_config.hpp"

namespace forgerecon {

// Adam with L2 weight decay folded into the gradient (g + wd * theta).
class Adam {
 public:
  Adam(ParameterStore& store, double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  // Parameters without a gradient are left untouched.
  void step();
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  long steps() const { return t_; }

 private:
  ParameterStore& store_;
  double lr_, weight_decay_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Tensor> m_, v_;
};

struct StepRecord {
  int step = 0;
  int epoch = 0;
  double lr = 0.0;
  double cls = 0.0, r1 = 0.0, r2 = 0.0, m = 0.0, total = 0.0;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double validation_auc = 0.0;
  bool improved = false;
};

struct TrainOptions {
  // Best-AUC checkpoint; nothing is written when empty.
  std::filesystem::path checkpoint_path;
  // Per-step loss CSV; nothing is written when empty.
  std::filesystem::path log_path;
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::unique_ptr<Model> model;  // holds the best-validation parameters
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  double best_validation_auc = 0.0;
  int best_epoch = -1;
};

// Runs the optimisation recipe. Throws DatasetError if the training split
// lacks a class, before any step is taken.
TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& validation_set,
                  const TrainOptions& options = {});

// One optimiser step on the given batch; exposed for tests and benchmarks.
LossBreakdown train_step(Model& model, Adam& optimizer, const Tensor& images, std::span<const int> labels,
                         const TrainConfig& config);

std::string step_log_header();
std::string step_log_row(const StepRecord& r);

// softmax(logits)[fake] per row.
std::vector<double> fake_scores(const Tensor& logits);

// Fake-class scores of every image, in dataset order, without gradient tracking.
std::vector<double> score_dataset(const Model& model, const Dataset& data, int batch_size,
                                  const std::optional<PerturbationSpec>& perturbation = std::nullopt);

struct EvalResult {
  MetricsReport report;
  std::vector<double> scores;
};

EvalResult evaluate(const Model& model, const Dataset& data, int batch_size,
                    const std::optional<PerturbationSpec>& perturbation = std::nullopt);

}  // namespace forgerecon
