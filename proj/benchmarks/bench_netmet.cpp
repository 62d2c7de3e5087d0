#include <benchmark/benchmark.h>

#include <random>

#include "novelty/netmet.hpp"

namespace {

void BM_NetworkFeatures(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  novelty::net::DiGraph g(n);
  std::mt19937 rng(5);
  for (std::size_t e = 0; e < n * 8; ++e) {
    const auto a = static_cast<novelty::net::NodeId>(rng() % n);
    const auto b = static_cast<novelty::net::NodeId>(rng() % n);
    if (a != b) g.add_edge(a, b);
  }
  novelty::net::NodeId u = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(novelty::net::network_features(g, u));
    u = static_cast<novelty::net::NodeId>((u + 1) % n);
  }
}
BENCHMARK(BM_NetworkFeatures)->Arg(1000)->Arg(10000);

}  // namespace
