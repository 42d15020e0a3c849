#include <benchmark/benchmark.h>

#include <thread>

#include "edgeprune/fifo.hpp"

using namespace edgeprune;

namespace {

// Producer and consumer threads moving tokens through one bounded FIFO.
void BM_FifoThroughput(benchmark::State& state) {
  auto token_size = static_cast<std::size_t>(state.range(0));
  auto capacity = static_cast<std::size_t>(state.range(1));
  constexpr int kTokens = 2000;
  for (auto _ : state) {
    Fifo fifo("e", token_size, capacity);
    std::thread producer([&] {
      for (int i = 0; i < kTokens; ++i) fifo.push({Token(token_size)});
      fifo.push_eos();
    });
    while (fifo.pop(1)) {
    }
    producer.join();
  }
  state.SetItemsProcessed(state.iterations() * kTokens);
  state.SetBytesProcessed(state.iterations() * kTokens * static_cast<std::int64_t>(token_size));
}
BENCHMARK(BM_FifoThroughput)->Args({8, 1})->Args({8, 16})->Args({73728, 2})->UseRealTime();

}  // namespace
