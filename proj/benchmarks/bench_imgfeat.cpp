#include <benchmark/benchmark.h>

#include <random>

#include "novelty/imgfeat.hpp"

namespace {

novelty::img::RasterImage noise(int w, int h) {
  std::mt19937 rng(3);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
  for (auto& p : px) p = static_cast<std::uint8_t>(rng());
  return {w, h, std::move(px)};
}

void BM_ExtractCompositional(benchmark::State& state) {
  const auto img = noise(static_cast<int>(state.range(0)), static_cast<int>(state.range(0) * 3 / 4));
  for (auto _ : state) benchmark::DoNotOptimize(novelty::img::extract_compositional(img));
}
BENCHMARK(BM_ExtractCompositional)->Arg(400)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_Saliency(benchmark::State& state) {
  const Eigen::MatrixXd gray = Eigen::MatrixXd::Random(novelty::img::kSaliencySize, novelty::img::kSaliencySize);
  for (auto _ : state) benchmark::DoNotOptimize(novelty::img::spectral_saliency(gray));
}
BENCHMARK(BM_Saliency);

void BM_Haralick(benchmark::State& state) {
  Eigen::MatrixXi q(256, 256);
  std::mt19937 rng(4);
  for (auto& v : q.reshaped()) v = static_cast<int>(rng() % 32);
  for (auto _ : state) benchmark::DoNotOptimize(novelty::img::haralick_features(q));
}
BENCHMARK(BM_Haralick);

}  // namespace
