#include "forgerecon/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "forgerecon/errors.hpp"
#include "forgerecon/ops.hpp"

namespace forgerecon {

Adam::Adam(ParameterStore& store, double lr, double weight_decay, double beta1, double beta2, double eps)
    : store_(store), lr_(lr), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& [name, var] : store_.entries()) {
    m_.push_back(Tensor::zeros_like(var.value()));
    v_.push_back(Tensor::zeros_like(var.value()));
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const auto& entries = store_.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Var p = entries[i].second;
    const Tensor& g = p.grad();
    if (g.empty()) continue;
    Tensor& theta = p.mutable_value();
    double* m = m_[i].data();
    double* v = v_[i].data();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double gk = g[k] + weight_decay_ * theta[k];
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * gk;
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * gk * gk;
      theta[k] -= lr_ * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps_);
    }
  }
}

LossBreakdown train_step(Model& model, Adam& optimizer, const Tensor& images, std::span<const int> labels,
                         const TrainConfig& config) {
  model.parameters().zero_grad();
  const Var x(images, false);
  const ModelOutputs out = model.forward(x);
  LossBreakdown loss = total_loss(out.logits, labels, x, out.recon, out.pooled_f5, config.loss_weights,
                                  config.reconstruction_norm);
  backward(loss.total);
  optimizer.step();
  return loss;
}

std::string step_log_header() { return "step,L_cls,L_r1,L_r2,L_m,total,epoch,lr"; }

std::string step_log_row(const StepRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g", r.step, r.cls, r.r1, r.r2, r.m, r.total,
                r.epoch, r.lr);
  return buf;
}

std::vector<double> fake_scores(const Tensor& logits) {
  if (logits.rank() != 2 || logits.dim(1) != 2) throw ShapeError("logits must be (B, 2), got " + shape_str(logits.shape()));
  std::vector<double> s(logits.dim(0));
  for (int b = 0; b < logits.dim(0); ++b) {
    const double d = logits[b * 2 + 1] - logits[b * 2];
    s[b] = d >= 0.0 ? 1.0 / (1.0 + std::exp(-d)) : std::exp(d) / (1.0 + std::exp(d));
  }
  return s;
}

std::vector<double> score_dataset(const Model& model, const Dataset& data, int batch_size,
                                  const std::optional<PerturbationSpec>& perturbation) {
  if (batch_size <= 0) throw ConfigError("batch size must be positive");
  NoGradGuard no_grad;
  std::vector<double> scores;
  scores.reserve(data.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + static_cast<std::size_t>(batch_size));
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    Tensor batch = make_batch(data, idx);
    if (perturbation) {
      const std::size_t n = shape_numel({batch.dim(1), batch.dim(2), batch.dim(3)});
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const Tensor p = perturb(data.images[idx[i]], *perturbation);
        std::copy(p.data(), p.data() + n, batch.data() + i * n);
      }
    }
    const ModelOutputs out = model.forward(Var(std::move(batch), false));
    const auto s = fake_scores(out.logits.value());
    scores.insert(scores.end(), s.begin(), s.end());
  }
  return scores;
}

EvalResult evaluate(const Model& model, const Dataset& data, int batch_size,
                    const std::optional<PerturbationSpec>& perturbation) {
  if (data.size() == 0) throw EmptyInputError("evaluation dataset is empty");
  EvalResult r;
  r.scores = score_dataset(model, data, batch_size, perturbation);
  r.report = metrics_report(r.scores, data.labels);
  return r;
}

TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& validation_set,
                  const TrainOptions& options) {
  config.validate();
  if (train_set.count(0) == 0 || train_set.count(1) == 0) {
    throw DatasetError("training split must contain both real and fake images (real " +
                       std::to_string(train_set.count(0)) + ", fake " + std::to_string(train_set.count(1)) + ")");
  }
  if (validation_set.count(0) == 0 || validation_set.count(1) == 0) {
    throw DatasetError("validation split must contain both real and fake images");
  }

  TrainResult result;
  result.model = std::make_unique<Model>(config.model_config(), config.seed);
  Model& model = *result.model;
  Adam optimizer(model.parameters(), config.lr, config.weight_decay);
  std::mt19937_64 rng(config.seed ^ 0x5DEECE66DULL);

  std::ofstream log;
  if (!options.log_path.empty()) {
    if (options.log_path.has_parent_path()) std::filesystem::create_directories(options.log_path.parent_path());
    log.open(options.log_path, std::ios::trunc);
    if (!log) throw std::runtime_error("cannot write training log " + options.log_path.string());
    log << step_log_header() << "\n";
  }

  std::vector<Tensor> best_params;
  int step = 0;
  bool stop = false;
  for (int epoch = 0; epoch < config.epochs && !stop; ++epoch) {
    optimizer.set_lr(scheduled_lr(config, epoch));
    const std::vector<std::size_t> order = epoch_order(train_set, rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      Tensor batch = make_batch(train_set, idx);
      if (config.augment) {
        const std::size_t n = shape_numel({batch.dim(1), batch.dim(2), batch.dim(3)});
        for (std::size_t i = 0; i < idx.size(); ++i) {
          const Tensor a = augment(train_set.images[idx[i]], rng);
          std::copy(a.data(), a.data() + n, batch.data() + i * n);
        }
      }
      const std::vector<int> labels = batch_labels(train_set, idx);
      const LossBreakdown loss = train_step(model, optimizer, batch, labels, config);
      StepRecord rec{step, epoch, optimizer.lr(), loss.cls(), loss.r1(), loss.r2(), loss.m(), loss.total_value()};
      result.steps.push_back(rec);
      if (log.is_open()) log << step_log_row(rec) << "\n";
      if (options.on_step) options.on_step(rec);
      ++step;
      if (config.max_steps > 0 && step >= config.max_steps) {
        stop = true;
        break;
      }
    }

    EpochRecord er{epoch, optimizer.lr(), 0.0, false};
    er.validation_auc = evaluate(model, validation_set, config.eval_batch_size).report.auc;
    if (result.best_epoch < 0 || er.validation_auc > result.best_validation_auc) {
      er.improved = true;
      result.best_validation_auc = er.validation_auc;
      result.best_epoch = epoch;
      best_params.clear();
      for (const auto& [name, var] : model.parameters().entries()) best_params.push_back(var.value());
      if (!options.checkpoint_path.empty()) {
        save_checkpoint(options.checkpoint_path, capture_checkpoint(model, config));
      }
    }
    result.epochs.push_back(er);
    if (options.on_epoch) options.on_epoch(er);
  }

  const auto& entries = model.parameters().entries();
  for (std::size_t i = 0; i < entries.size() && !best_params.empty(); ++i) {
    Var v = entries[i].second;
    v.mutable_value() = best_params[i];
  }
  model.parameters().zero_grad();
  return result;
}

}  // namespace forgerecon
