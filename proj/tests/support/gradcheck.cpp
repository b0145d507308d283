#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "forgerecon/ops.hpp"

namespace forgerecon::testing {

Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double lo, double hi) {
  Tensor t(shape);
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.values()) v = u(rng);
  return t;
}

Var random_leaf(const Shape& shape, std::mt19937_64& rng, double lo, double hi) {
  return Var(random_tensor(shape, rng, lo, hi), true);
}

Var random_projection(const Var& out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ag::sum(ag::mul(out, Var(random_tensor(out.shape(), rng), false)));
}

GradCheckResult check_gradients_at(const std::function<Var()>& f, const std::vector<Probe>& probes, double h) {
  std::vector<Var> leaves;
  for (const Probe& p : probes) {
    if (std::find_if(leaves.begin(), leaves.end(), [&](const Var& v) { return v.node() == p.leaf.node(); }) ==
        leaves.end()) {
      leaves.push_back(p.leaf);
    }
  }
  for (Var& v : leaves) v.zero_grad();
  backward(f());

  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  for (const Probe& p : probes) {
    Var leaf = p.leaf;
    const double analytic = leaf.grad().empty() ? 0.0 : leaf.grad()[p.index];
    double& x = leaf.mutable_value()[p.index];
    const double orig = x;
    double plus, minus;
    {
      NoGradGuard guard;
      x = orig + h;
      plus = f().value()[0];
      x = orig - h;
      minus = f().value()[0];
    }
    x = orig;
    const double numeric = (plus - minus) / (2.0 * h);
    diff2 += (analytic - numeric) * (analytic - numeric);
    a2 += analytic * analytic;
    n2 += numeric * numeric;
  }
  GradCheckResult r;
  r.checked = probes.size();
  r.analytic_norm = std::sqrt(a2);
  const double denom = std::max(std::sqrt(a2), std::sqrt(n2));
  r.rel_error = denom > 0.0 ? std::sqrt(diff2) / denom : 0.0;
  return r;
}

GradCheckResult check_gradients(const std::function<Var()>& f, std::vector<Var> leaves, std::size_t max_per_leaf,
                                std::uint64_t seed, double h) {
  std::mt19937_64 rng(seed);
  std::vector<Probe> probes;
  for (const Var& leaf : leaves) {
    std::vector<std::size_t> idx(leaf.value().size());
    std::iota(idx.begin(), idx.end(), 0);
    if (idx.size() > max_per_leaf) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(max_per_leaf);
    }
    for (std::size_t i : idx) probes.push_back({leaf, i});
  }
  return check_gradients_at(f, probes, h);
}

}  // namespace forgerecon::testing
