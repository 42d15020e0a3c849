#include <benchmark/benchmark.h>

#include <random>

#include "edgeprune/tensor.hpp"

using namespace edgeprune;

namespace {

Tensor random_tensor(Shape s, std::uint64_t seed) {
  std::mt19937 rng(static_cast<std::uint32_t>(seed));
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Tensor t(std::move(s));
  for (auto& v : t.data) v = u(rng);
  return t;
}

// L1 and L2 of the vehicle network.
void BM_Conv2d(benchmark::State& state) {
  auto size = static_cast<std::size_t>(state.range(0));
  auto in_c = static_cast<std::size_t>(state.range(1));
  auto input = random_tensor({{size, size, in_c}}, 1);
  auto w = ConvWeights::seeded(32, 5, in_c, 2);
  w.pack();
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d(input, w));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(size * size * 32 * 25 * in_c));
}
BENCHMARK(BM_Conv2d)->Args({96, 3})->Args({48, 32})->Unit(benchmark::kMillisecond);

void BM_MaxPoolRelu(benchmark::State& state) {
  auto input = random_tensor({{96, 96, 32}}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ops::relu(ops::maxpool2(input)));
}
BENCHMARK(BM_MaxPoolRelu)->Unit(benchmark::kMicrosecond);

void BM_Dense(benchmark::State& state) {
  auto inputs = static_cast<std::size_t>(state.range(0));
  auto outputs = static_cast<std::size_t>(state.range(1));
  auto input = random_tensor({{inputs}}, 4);
  auto w = DenseWeights::seeded(outputs, inputs, 5);
  w.pack();
  for (auto _ : state) benchmark::DoNotOptimize(ops::dense(input, w));
}
BENCHMARK(BM_Dense)->Args({18432, 256})->Args({256, 64})->Unit(benchmark::kMicrosecond);

void BM_FloatCodec(benchmark::State& state) {
  auto t = random_tensor({{48, 48, 32}}, 6);
  for (auto _ : state) benchmark::DoNotOptimize(decode_floats(encode_floats(t.data)));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(t.shape.bytes()));
}
BENCHMARK(BM_FloatCodec);

}  // namespace
