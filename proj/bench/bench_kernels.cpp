// OpenMP/GEMM kernels against the serial reference loops.

#include <benchmark/benchmark.h>

#include <random>

#include "forgerecon/kernels.hpp"
#include "forgerecon/model.hpp"
#include "forgerecon/training.hpp"

using namespace forgerecon;

namespace {

Tensor random_tensor(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t(shape);
  for (double& v : t.values()) v = u(rng);
  return t;
}

// Batch, channels in/out, spatial size, kernel, stride.
void conv_args(benchmark::internal::Benchmark* b) {
  b->Args({8, 16, 32, 32, 3, 1})->Args({8, 32, 64, 16, 3, 2})->Args({8, 64, 128, 8, 1, 1});
}

kernels::ConvGeometry geometry(const benchmark::State& s) {
  kernels::ConvGeometry g;
  g.stride = static_cast<int>(s.range(5));
  g.pad = static_cast<int>(s.range(4)) / 2;
  return g;
}

template <bool Fast>
void BM_ConvForward(benchmark::State& state) {
  const int n = state.range(0), cin = state.range(1), cout = state.range(2), hw = state.range(3), k = state.range(4);
  const Tensor x = random_tensor({n, cin, hw, hw}, 1);
  const Tensor w = random_tensor({cout, cin, k, k}, 2);
  const Tensor bias = random_tensor({cout}, 3);
  const kernels::ConvGeometry g = geometry(state);
  for (auto _ : state) {
    Tensor y = Fast ? kernels::conv2d_forward(x, w, &bias, g) : kernels::reference::conv2d_forward(x, w, &bias, g);
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Fast>
void BM_ConvBackward(benchmark::State& state) {
  const int n = state.range(0), cin = state.range(1), cout = state.range(2), hw = state.range(3), k = state.range(4);
  const Tensor x = random_tensor({n, cin, hw, hw}, 1);
  const Tensor w = random_tensor({cout, cin, k, k}, 2);
  const kernels::ConvGeometry g = geometry(state);
  const Tensor dy = random_tensor(kernels::conv2d_forward(x, w, nullptr, g).shape(), 4);
  for (auto _ : state) {
    auto grads = Fast ? kernels::conv2d_backward(x, w, dy, g, true, true, true) : kernels::reference::conv2d_backward(x, w, dy, g);
    benchmark::DoNotOptimize(grads.dw.data());
  }
}

template <bool Fast>
void BM_Bmm(benchmark::State& state) {
  const int n = state.range(0);
  const Tensor a = random_tensor({8, n, n}, 5), b = random_tensor({8, n, n}, 6);
  for (auto _ : state) {
    Tensor c = Fast ? kernels::bmm(a, b, false, true) : kernels::reference::bmm(a, b, false, true);
    benchmark::DoNotOptimize(c.data());
  }
}

template <bool Fast>
void BM_Resize(benchmark::State& state) {
  const Tensor x = random_tensor({16, 16, 16, 16}, 7);
  for (auto _ : state) {
    Tensor y = Fast ? kernels::resize_bilinear_forward(x, 64, 64) : kernels::reference::resize_bilinear_forward(x, 64, 64);
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Fast>
void BM_AdaptivePool(benchmark::State& state) {
  const Tensor x = random_tensor({16, 32, 32, 32}, 8);
  for (auto _ : state) {
    Tensor y = Fast ? kernels::adaptive_avg_pool_forward(x, 4, 4) : kernels::reference::adaptive_avg_pool_forward(x, 4, 4);
    benchmark::DoNotOptimize(y.data());
  }
}

// End to end: one optimiser step of the desk-scale model.
void BM_TrainStep(benchmark::State& state) {
  TrainConfig c;
  c.backbone = BackboneConfig::tiny(32);
  c.ablation = static_cast<Ablation>(state.range(0));
  Model model(c.model_config(), 0);
  Adam opt(model.parameters(), 1e-3, 0.0);
  const Tensor x = random_tensor({16, 3, 32, 32}, 9);
  std::vector<int> labels(16);
  for (int i = 0; i < 16; ++i) labels[i] = i % 2;
  for (auto _ : state) train_step(model, opt, x, labels, c);
  state.SetLabel(to_string(c.ablation));
}

}  // namespace

BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/openmp")->Apply(conv_args)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/reference")->Apply(conv_args)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ConvBackward<true>)->Name("conv_backward/openmp")->Apply(conv_args)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ConvBackward<false>)->Name("conv_backward/reference")->Apply(conv_args)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Bmm<true>)->Name("bmm/openmp")->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Bmm<false>)->Name("bmm/reference")->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Resize<true>)->Name("resize/openmp")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Resize<false>)->Name("resize/reference")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_AdaptivePool<true>)->Name("adaptive_pool/openmp")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_AdaptivePool<false>)->Name("adaptive_pool/reference")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_TrainStep)
    ->Name("train_step_batch16")
    ->Arg(static_cast<int>(Ablation::baseline))
    ->Arg(static_cast<int>(Ablation::full))
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
