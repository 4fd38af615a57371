// SPDX-License-Identifier: Apache-2.0
//
// Parallel kernels against their serial references on bottleneck-sized
// problems, plus whole-model throughput. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <random>

#include "lct/kernels/reference.hpp"
#include "lct/model/enhance.hpp"
#include "lct/model/stream.hpp"

using namespace lct;
using kernels::ConvGeometry;
using kernels::TrapezoidMask;

namespace {

Tensor random(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t(std::move(shape));
  for (Index i = 0; i < t.numel(); ++i) t[i] = static_cast<Real>(u(rng));
  return t;
}

// One second of frames through the second encoder layer.
const ConvGeometry kEncoder{2, 3, 1, 2, 1, 0, 1, 1, 1};
const ConvGeometry kDecoder{2, 3, 1, 2, 0, 1, 1, 1, 1};

void BM_Conv2d(benchmark::State& state, bool parallel) {
  const Tensor x = random({1, 16, 63, 129}, 1), w = random({32, 16, 2, 3}, 2), b = random({32}, 3);
  for (auto _ : state)
    benchmark::DoNotOptimize(parallel ? kernels::conv2d_forward(x, w, &b, kEncoder)
                                      : reference::conv2d(x, w, &b, kEncoder));
}

void BM_ConvTranspose2d(benchmark::State& state, bool parallel) {
  const Tensor x = random({1, 64, 63, 65}, 4), w = random({64, 16, 2, 3}, 5), b = random({16}, 6);
  for (auto _ : state)
    benchmark::DoNotOptimize(parallel ? kernels::conv_transpose2d_forward(x, w, &b, kDecoder)
                                      : reference::conv_transpose2d(x, w, &b, kDecoder));
}

void BM_Linear(benchmark::State& state, bool parallel) {
  const Tensor x = random({33, 63, 64}, 7), w = random({64, 64}, 8), b = random({64}, 9);
  for (auto _ : state)
    benchmark::DoNotOptimize(parallel ? kernels::linear_forward(x, w, &b) : reference::linear(x, w, &b));
}

void BM_GroupedGru(benchmark::State& state, bool parallel) {
  const Tensor x = random({33, 63, 64}, 10), h0({33, 64});
  const Tensor w_ih = random({4, 48, 16}, 11), w_hh = random({4, 48, 16}, 12), b = random({4, 48}, 13);
  for (auto _ : state)
    benchmark::DoNotOptimize(parallel ? kernels::gru_forward(x, h0, w_ih, w_hh, b, nullptr)
                                      : reference::gru(x, h0, w_ih, w_hh, b));
}

void BM_LayerNorm(benchmark::State& state, bool parallel) {
  const Tensor x = random({33 * 63, 64}, 14), g = random({64}, 15), b = random({64}, 16);
  for (auto _ : state)
    benchmark::DoNotOptimize(parallel ? kernels::layer_norm_forward(x, g, b, nullptr)
                                      : reference::layer_norm(x, g, b));
}

void BM_TimeAttention(benchmark::State& state, bool parallel) {
  const Tensor q = random({33, 63, 64}, 17), k = random({33, 63, 64}, 18), v = random({33, 63, 64}, 19);
  const auto mask = TrapezoidMask::causal(62, 0);
  for (auto _ : state)
    benchmark::DoNotOptimize(parallel ? kernels::attention_forward(q, k, v, 4, mask, nullptr)
                                      : reference::attention(q, k, v, 4, mask));
}

void BM_OfflineOneSecond(benchmark::State& state) {
  model::Generator gen(model::ModelConfig{});
  const Tensor x = random({16000}, 20);
  for (auto _ : state) benchmark::DoNotOptimize(model::enhance_offline(gen, x.values()));
  state.SetItemsProcessed(state.iterations() * 16000);
}

void BM_StreamHop(benchmark::State& state) {
  model::Generator gen(model::ModelConfig{});
  model::StreamEnhancer stream(gen);
  const Tensor x = random({256}, 21);
  for (auto _ : state) benchmark::DoNotOptimize(stream.push(x.values()));
  state.SetItemsProcessed(state.iterations() * 256);
}

}  // namespace

BENCHMARK_CAPTURE(BM_Conv2d, reference, false)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_Conv2d, parallel, true)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_ConvTranspose2d, reference, false)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_ConvTranspose2d, parallel, true)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_Linear, reference, false)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_Linear, parallel, true)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_GroupedGru, reference, false)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_GroupedGru, parallel, true)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_LayerNorm, reference, false)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_LayerNorm, parallel, true)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_TimeAttention, reference, false)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_TimeAttention, parallel, true)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_OfflineOneSecond)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StreamHop)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
