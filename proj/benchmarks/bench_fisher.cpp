#include <benchmark/benchmark.h>

#include <random>

#include "novelty/fisher.hpp"

namespace {

novelty::gmm::GaussianMixture mixture(Eigen::Index n, Eigen::Index d) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  novelty::gmm::GaussianMixture gm;
  gm.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  gm.means.resize(n, d);
  gm.variances.resize(n, d);
  for (auto& v : gm.means.reshaped()) v = g(rng);
  for (auto& v : gm.variances.reshaped()) v = 0.5 + std::abs(g(rng));
  return gm;
}

void BM_FisherVector(benchmark::State& state) {
  const auto gm = mixture(state.range(0), state.range(1));
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(state.range(1), -1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(novelty::fisher::fisher_vector(gm, x));
}
BENCHMARK(BM_FisherVector)->Args({16, 47})->Args({16, 64})->Args({64, 64});

void BM_Fvmrf(benchmark::State& state) {
  const auto gm = mixture(16, 64);
  Eigen::MatrixXd window = Eigen::MatrixXd::Random(500, 64);
  const auto ref = novelty::fisher::estimate_mrf_reference(gm, window);
  const Eigen::VectorXd x = window.row(3).transpose();
  for (auto _ : state) benchmark::DoNotOptimize(novelty::fisher::fvmrf_novelty(ref, x));
}
BENCHMARK(BM_Fvmrf);

}  // namespace
