#include <benchmark/benchmark.h>

#include <future>
#include <thread>

#include "edgeprune/netfifo.hpp"
#include "edgeprune/wire.hpp"

using namespace edgeprune;
using namespace std::chrono_literals;

namespace {

void BM_EncodeDecode(benchmark::State& state) {
  auto token_size = static_cast<std::uint32_t>(state.range(0));
  std::vector<Token> tokens(2, Token(token_size, 0x5a));
  for (auto _ : state) benchmark::DoNotOptimize(wire::decode_frame(wire::encode_frame(3, 7, tokens, token_size)));
  state.SetBytesProcessed(state.iterations() * 2 * static_cast<std::int64_t>(token_size));
}
BENCHMARK(BM_EncodeDecode)->Arg(64)->Arg(73728)->Arg(294912);

// Unshaped loopback TCP transfer of one-token frames.
void BM_LoopbackTransfer(benchmark::State& state) {
  auto token_size = static_cast<std::uint32_t>(state.range(0));
  constexpr int kFrames = 64;
  std::vector<Token> tokens(1, Token(token_size, 0x11));
  for (auto _ : state) {
    net::RxListener listener("e", 0, 0, token_size, 1);
    auto accepted = std::async(std::launch::async, [&] { return listener.accept(5000ms); });
    auto tx = net::TxEndpoint::connect("e", "127.0.0.1", listener.port(), {1, 0}, token_size, {}, 5000ms);
    auto rx = accepted.get();
    std::thread sender([&] {
      for (int i = 0; i < kFrames; ++i) tx.send(tokens);
      tx.send_eos();
    });
    while (!rx.receive().eos()) {
    }
    sender.join();
  }
  state.SetBytesProcessed(state.iterations() * kFrames * static_cast<std::int64_t>(token_size));
}
BENCHMARK(BM_LoopbackTransfer)->Arg(1024)->Arg(294912)->UseRealTime()->Unit(benchmark::kMillisecond);

}  // namespace
