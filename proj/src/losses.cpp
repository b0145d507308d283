#include "forgerecon/losses.hpp"

#include <algorithm>
#include <cmath>

#include "forgerecon/errors.hpp"
#include "forgerecon/ops.hpp"

namespace forgerecon {

namespace {

constexpr double kNormFloor = 1e-12;

Var constant_zero() { return Var(Tensor({1}, 0.0), false); }

}  // namespace

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine_distance: vector lengths differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DegenerateVectorError("cosine_distance: zero-norm vector");
  const double cosine = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
  return (1.0 - cosine) / 2.0;
}

Var metric_loss(const Var& features, std::span<const int> labels) {
  const Tensor& fv = features.value();
  if (fv.rank() != 2 || static_cast<std::size_t>(fv.dim(0)) != labels.size()) {
    throw ShapeError("metric_loss: features " + shape_str(fv.shape()) + " with " + std::to_string(labels.size()) +
                     " labels");
  }
  const int n = fv.dim(0), c = fv.dim(1);
  // Unit rows and their norms.
  std::vector<double> unit(fv.size()), norms(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = 0; k < c; ++k) s += fv[i * c + k] * fv[i * c + k];
    norms[i] = std::max(std::sqrt(s), kNormFloor);
    for (int k = 0; k < c; ++k) unit[i * c + k] = fv[i * c + k] / norms[i];
  }
  std::vector<int> real, fake;
  for (int i = 0; i < n; ++i) (labels[i] == kRealLabel ? real : fake).push_back(i);
  const double n_rr = static_cast<double>(real.size()) * (static_cast<double>(real.size()) - 1.0) / 2.0;
  const double n_rf = static_cast<double>(real.size()) * static_cast<double>(fake.size());

  // (i, j, coefficient on d_ij)
  struct Pair {
    int i, j;
    double coef;
  };
  std::vector<Pair> pairs;
  for (std::size_t a = 0; a < real.size(); ++a)
    for (std::size_t b = a + 1; b < real.size(); ++b) pairs.push_back({real[a], real[b], 1.0 / n_rr});
  for (int r : real)
    for (int f : fake) pairs.push_back({r, f, -1.0 / n_rf});

  auto cosine = [&](int i, int j) {
    double s = 0.0;
    for (int k = 0; k < c; ++k) s += unit[i * c + k] * unit[j * c + k];
    return s;
  };
  double loss = 0.0;
  for (const Pair& p : pairs) loss += p.coef * (1.0 - cosine(p.i, p.j)) / 2.0;

  return make_result(
      Tensor({1}, loss), {features},
      [unit = std::move(unit), norms = std::move(norms), pairs = std::move(pairs), n, c](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        Tensor g({n, c});
        const double up = self.grad[0];
        for (const Pair& pr : pairs) {
          double cs = 0.0;
          for (int k = 0; k < c; ++k) cs += unit[pr.i * c + k] * unit[pr.j * c + k];
          // d d_ij / d a_i = -(u_j - cs u_i) / (2 |a_i|)
          const double s = -0.5 * pr.coef * up;
          for (int k = 0; k < c; ++k) {
            g[pr.i * c + k] += s * (unit[pr.j * c + k] - cs * unit[pr.i * c + k]) / norms[pr.i];
            g[pr.j * c + k] += s * (unit[pr.i * c + k] - cs * unit[pr.j * c + k]) / norms[pr.j];
          }
        }
        p.accumulate_grad(g);
      });
}

Var reconstruction_loss(const Var& image, const Var& reconstruction, std::span<const int> labels,
                        ReconstructionNorm norm) {
  const Tensor& x = image.value();
  const Tensor& r = reconstruction.value();
  if (x.shape() != r.shape() || x.rank() != 4 || static_cast<std::size_t>(x.dim(0)) != labels.size()) {
    throw ShapeError("reconstruction_loss: image " + shape_str(x.shape()) + ", reconstruction " +
                     shape_str(r.shape()) + ", " + std::to_string(labels.size()) + " labels");
  }
  const int batch = x.dim(0);
  const std::size_t per = x.size() / std::max(batch, 1);
  std::vector<int> real;
  for (int b = 0; b < batch; ++b)
    if (labels[b] == kRealLabel) real.push_back(b);
  if (real.empty()) return make_result(Tensor({1}, 0.0), {image, reconstruction}, [](Node&) {});
  const double denom = static_cast<double>(real.size() * per);
  double loss = 0.0;
  for (int b : real) {
    for (std::size_t i = 0; i < per; ++i) {
      const double d = x[b * per + i] - r[b * per + i];
      loss += norm == ReconstructionNorm::squared ? d * d : std::abs(d);
    }
  }
  loss /= denom;
  return make_result(Tensor({1}, loss), {image, reconstruction},
                     [real = std::move(real), per, denom, norm](Node& self) {
                       Node& px = *self.parents[0];
                       Node& pr = *self.parents[1];
                       Tensor g(px.value.shape());
                       const double up = self.grad[0] / denom;
                       for (int b : real) {
                         for (std::size_t i = 0; i < per; ++i) {
                           const double d = px.value[b * per + i] - pr.value[b * per + i];
                           g[b * per + i] = norm == ReconstructionNorm::squared
                                                ? 2.0 * d * up
                                                : (d > 0 ? up : (d < 0 ? -up : 0.0));
                         }
                       }
                       if (px.requires_grad) px.accumulate_grad(g);
                       if (pr.requires_grad) {
                         for (double& v : g.values()) v = -v;
                         pr.accumulate_grad(g);
                       }
                     });
}

LossBreakdown total_loss(const Var& logits, std::span<const int> labels, const Var& image,
                         const ReconstructionPair& recon, const Var& pooled_features, const LossWeights& weights,
                         ReconstructionNorm norm) {
  if (weights.lambda1 < 0 || weights.lambda2 < 0 || weights.lambda3 < 0) {
    throw ConfigError("loss weights must be non-negative");
  }
  LossBreakdown out;
  out.classification = ag::cross_entropy(logits, labels);
  out.reconstruction1 =
      recon.first.defined() ? reconstruction_loss(image, recon.first, labels, norm) : constant_zero();
  out.reconstruction2 =
      recon.second.defined() ? reconstruction_loss(image, recon.second, labels, norm) : constant_zero();
  out.metric = pooled_features.defined() ? metric_loss(pooled_features, labels) : constant_zero();
  out.total = ag::add(ag::add(out.classification, ag::scale(out.reconstruction1, weights.lambda1)),
                      ag::add(ag::scale(out.reconstruction2, weights.lambda2), ag::scale(out.metric, weights.lambda3)));
  return out;
}

}  // namespace forgerecon
