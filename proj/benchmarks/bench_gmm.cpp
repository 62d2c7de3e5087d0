#include <benchmark/benchmark.h>

#include <random>

#include "novelty/gmm.hpp"

namespace {

Eigen::MatrixXd sample(Eigen::Index n, Eigen::Index d) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = g(rng) + 3.0 * static_cast<double>(i % 4);
  }
  return m;
}

void BM_FitGmm(benchmark::State& state) {
  const auto data = sample(state.range(0), state.range(1));
  novelty::gmm::FitConfig cfg;
  cfg.components = 16;
  cfg.max_iters = 50;
  for (auto _ : state) benchmark::DoNotOptimize(novelty::gmm::fit_gmm(data, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitGmm)->Args({1000, 47})->Args({1000, 64})->Unit(benchmark::kMillisecond);

void BM_LogPdf(benchmark::State& state) {
  const auto data = sample(500, state.range(0));
  novelty::gmm::FitConfig cfg;
  cfg.max_iters = 10;
  const auto gm = novelty::gmm::fit_gmm(data, cfg).model;
  const Eigen::VectorXd x = data.row(7).transpose();
  for (auto _ : state) benchmark::DoNotOptimize(novelty::gmm::log_pdf(gm, x));
}
BENCHMARK(BM_LogPdf)->Arg(47)->Arg(64);

void BM_Projection(benchmark::State& state) {
  const auto data = sample(800, 2048);
  for (auto _ : state) benchmark::DoNotOptimize(novelty::gmm::fit_projection(data, 64));
}
BENCHMARK(BM_Projection)->Unit(benchmark::kMillisecond);

}  // namespace
