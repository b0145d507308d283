#pragma once

#include <span>
#include <string>
#include <vector>

namespace forgerecon {

// Scores are fake-probabilities; labels 0 = real, 1 = fake.
// Rank-based ROC area with half credit for tied scores.
// Throws UndefinedMetricError when either class is absent.
double auc(std::span<const double> scores, std::span<const int> labels);

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

// Sweeps thresholds over the observed scores (predict fake when score >= t)
// and reports the mean of FPR and FNR at the point where they are closest.
EerResult eer(std::span<const double> scores, std::span<const int> labels);

// Fraction of samples whose label equals (score >= threshold).
double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

struct MetricsReport {
  double auc = 0.0;
  double eer = 0.0;
  double eer_threshold = 0.0;
  double acc = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;

  std::size_t count() const { return n_pos + n_neg; }
  static std::string csv_header() { return "acc,auc,eer,eer_threshold,n_pos,n_neg"; }
  std::string csv_row() const;
  std::string table() const;
};

MetricsReport metrics_report(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

}  // namespace forgerecon
