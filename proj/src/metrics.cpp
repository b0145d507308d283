#include "forgerecon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "forgerecon/errors.hpp"

namespace forgerecon {
namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("metric inputs differ in length: " + std::to_string(scores.size()) + " scores, " +
                     std::to_string(labels.size()) + " labels");
  }
  if (scores.empty()) throw EmptyInputError("metric on an empty set");
  for (int l : labels) {
    if (l != 0 && l != 1) throw ConfigError("labels must be 0 or 1, got " + std::to_string(l));
  }
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const int> labels) {
  std::size_t pos = 0;
  for (int l : labels) pos += l == 1;
  return {labels.size() - pos, pos};
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const auto [neg, pos] = class_counts(labels);
  if (pos == 0 || neg == 0) throw UndefinedMetricError("AUC undefined: only one class present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Mann-Whitney U with average ranks over tie groups.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) rank_sum += avg_rank;
    }
    i = j + 1;
  }
  const double p = static_cast<double>(pos);
  const double n = static_cast<double>(neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

EerResult eer(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const auto [neg, pos] = class_counts(labels);
  if (pos == 0 || neg == 0) throw UndefinedMetricError("EER undefined: only one class present");

  std::vector<double> thresholds(scores.begin(), scores.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  // Sorted copies make each threshold an O(log n) count.
  std::vector<double> real_scores, fake_scores;
  for (std::size_t k = 0; k < scores.size(); ++k) (labels[k] == 1 ? fake_scores : real_scores).push_back(scores[k]);
  std::sort(real_scores.begin(), real_scores.end());
  std::sort(fake_scores.begin(), fake_scores.end());

  EerResult best;
  double best_gap = INFINITY;
  for (double t : thresholds) {
    const auto real_below = std::lower_bound(real_scores.begin(), real_scores.end(), t) - real_scores.begin();
    const auto fake_below = std::lower_bound(fake_scores.begin(), fake_scores.end(), t) - fake_scores.begin();
    const double fpr = static_cast<double>(real_scores.size() - real_below) / static_cast<double>(neg);
    const double fnr = static_cast<double>(fake_below) / static_cast<double>(pos);
    const double gap = std::abs(fpr - fnr);
    if (gap < best_gap) {
      best_gap = gap;
      best = {0.5 * (fpr + fnr), t};
    }
  }
  return best;
}

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_inputs(scores, labels);
  std::size_t correct = 0;
  for (std::size_t k = 0; k < scores.size(); ++k) correct += (scores[k] >= threshold ? 1 : 0) == labels[k];
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

std::string MetricsReport::csv_row() const {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%zu,%zu", acc, auc, eer, eer_threshold, n_pos, n_neg);
  return buf;
}

std::string MetricsReport::table() const {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "| metric | value  |\n|--------|--------|\n| AUC    | %.4f |\n| EER    | %.4f |\n| ACC    | %.4f |\n"
                "| n_pos  | %6zu |\n| n_neg  | %6zu |\n",
                auc, eer, acc, n_pos, n_neg);
  return buf;
}

MetricsReport metrics_report(std::span<const double> scores, std::span<const int> labels, double threshold) {
  MetricsReport r;
  r.auc = auc(scores, labels);
  const EerResult e = eer(scores, labels);
  r.eer = e.eer;
  r.eer_threshold = e.threshold;
  r.acc = accuracy(scores, labels, threshold);
  const auto [neg, pos] = class_counts(labels);
  r.n_pos = pos;
  r.n_neg = neg;
  return r;
}

}  // namespace forgerecon
