#include <benchmark/benchmark.h>

#include "edgeprune/analyzer.hpp"
#include "edgeprune/explorer.hpp"
#include "edgeprune/graphgen.hpp"

using namespace edgeprune;

namespace {

void BM_DeepChainMappings(benchmark::State& state) {
  auto g = application_graph_from_json(graphgen::deep_chain_graph());
  auto p = platform_graph_from_json(graphgen::loopback_platform({{"c", 7100}, {"s", 7100}}));
  for (auto _ : state) benchmark::DoNotOptimize(explorer::generate_mappings(g, p, "c", "s"));
}
BENCHMARK(BM_DeepChainMappings)->Unit(benchmark::kMicrosecond);

void BM_AnalyzeDpg(benchmark::State& state) {
  auto g = application_graph_from_json(graphgen::dpg_graph(static_cast<std::uint32_t>(state.range(0)), 10, 1));
  for (auto _ : state) benchmark::DoNotOptimize(analyzer::analyze(g));
}
BENCHMARK(BM_AnalyzeDpg)->Arg(2)->Arg(8)->Unit(benchmark::kMicrosecond);

}  // namespace
