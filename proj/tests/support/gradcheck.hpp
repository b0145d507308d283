#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "forgerecon/autograd.hpp"

namespace forgerecon::testing {

Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0);
Var random_leaf(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0);

// sum(out * P) for a fixed random P; turns any output into a scalar whose
// gradient exercises every output element.
Var random_projection(const Var& out, std::uint64_t seed);

struct GradCheckResult {
  double rel_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  std::size_t checked = 0;
  double analytic_norm = 0.0;
};

// Compares backward() of f against central differences on the leaves. With
// max_per_leaf set, a seeded random subset of each leaf's entries is probed.
GradCheckResult check_gradients(const std::function<Var()>& f, std::vector<Var> leaves,
                                std::size_t max_per_leaf = std::numeric_limits<std::size_t>::max(),
                                std::uint64_t seed = 0, double h = 1e-6);

// Same, over an explicit list of (leaf, element) probes.
struct Probe {
  Var leaf;
  std::size_t index;
};
GradCheckResult check_gradients_at(const std::function<Var()>& f, const std::vector<Probe>& probes, double h = 1e-6);

}  // namespace forgerecon::testing
