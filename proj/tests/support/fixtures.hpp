#pragma once

#include <random>
#include <string>

#include "forgerecon/parameters.hpp"

namespace forgerecon::testing {

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Zeroes every additive offset: conv/linear biases and normalisation betas.
inline void zero_biases(ParameterStore& store) {
  for (const auto& [name, v] : store.entries()) {
    if (ends_with(name, ".bias") || ends_with(name, ".beta")) Var(v).mutable_value().fill(0.0);
  }
}

inline void set_all(const Var& v, double value) { Var(v).mutable_value().fill(value); }

inline void randomize(const Var& v, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& x : Var(v).mutable_value().values()) x = u(rng);
}

inline void randomize_biases(ParameterStore& store, std::mt19937_64& rng, double scale) {
  for (const auto& [name, v] : store.entries()) {
    if (ends_with(name, ".bias") || ends_with(name, ".beta")) randomize(v, rng, scale);
  }
}

inline bool all_zero(const Tensor& t) {
  for (double v : t.values())
    if (v != 0.0) return false;
  return true;
}

}  // namespace forgerecon::testing
