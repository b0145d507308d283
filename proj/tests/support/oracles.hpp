#pragma once

// Brute-force reference computations, written independently of the library.

#include <vector>

namespace forgerecon::testing {

// Fraction of (fake, real) pairs ordered correctly, ties counted as half.
double auc_by_pairs(const std::vector<double>& scores, const std::vector<int>& labels);

struct EerOracle {
  double eer;
  double threshold;
  double fpr;
  double fnr;
};
// Every distinct score as a threshold, rates by direct counting, first
// threshold (ascending) attaining the smallest |FPR - FNR|.
EerOracle eer_by_sweep(const std::vector<double>& scores, const std::vector<int>& labels);

// Pairwise double loop over rows of a (B, C) row-major matrix.
double metric_loss_by_pairs(const std::vector<double>& features, int rows, int cols, const std::vector<int>& labels);

}  // namespace forgerecon::testing
