#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "novelty/error.hpp"
#include "novelty/imgfeat.hpp"
#include "oracles.hpp"

using namespace novelty::img;

namespace {

RasterImage random_image(int w, int h, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
  for (auto& p : px) p = static_cast<std::uint8_t>(byte(rng));
  return {w, h, std::move(px)};
}

double group_sum(const CompositionalFeatures& f, std::size_t first, std::size_t n) {
  return std::accumulate(f.begin() + first, f.begin() + first + n, 0.0);
}

}  // namespace

TEST(Compositional, ConstantGrayImage) {
  const auto f = extract_compositional(RasterImage::filled(32, 24, 128, 128, 128));
  EXPECT_EQ(f[kLuminanceContrast], 0.0);
  EXPECT_EQ(f[kMeanSaturation], 0.0);
  EXPECT_EQ(f[kHaralickContrast], 0.0);
  EXPECT_EQ(f[kHaralickEnergy], 1.0);
  EXPECT_EQ(f[kHaralickEntropy], 0.0);
  EXPECT_EQ(f[kSymmetry], 1.0);
  EXPECT_EQ(f[kSalientRegionCount], 0.0);
  EXPECT_EQ(f[kSaliencyMax], 0.0);
}

TEST(Compositional, MirrorHasSameSymmetry) {
  for (unsigned seed = 0; seed < 5; ++seed) {
    const auto img = random_image(17, 11, seed);
    const auto a = extract_compositional(img);
    const auto b = extract_compositional(mirror_horizontal(img));
    EXPECT_DOUBLE_EQ(a[kSymmetry], b[kSymmetry]);
  }
}

TEST(Compositional, MirroredHalvesAreSymmetric) {
  auto img = random_image(16, 12, 3);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width / 2; ++c) {
      for (int ch = 0; ch < 3; ++ch) img.at(r, img.width - 1 - c, ch) = img.at(r, c, ch);
    }
  }
  EXPECT_DOUBLE_EQ(extract_compositional(img)[kSymmetry], 1.0);
}

TEST(Compositional, InvariantsOnRandomImages) {
  for (unsigned seed = 0; seed < 6; ++seed) {
    const auto f = extract_compositional(random_image(20 + seed * 7, 9 + seed * 5, seed));
    for (double v : f) EXPECT_TRUE(std::isfinite(v));
    EXPECT_NEAR(group_sum(f, kHueHistogram, kHueBins), 1.0, 1e-9);
    EXPECT_NEAR(group_sum(f, kSaturationHistogram, kSaturationBins), 1.0, 1e-9);
    EXPECT_NEAR(group_sum(f, kBrightnessHistogram, kBrightnessBins), 1.0, 1e-9);
    EXPECT_GE(f[kSymmetry], 0.0);
    EXPECT_LE(f[kSymmetry], 1.0);
    EXPECT_GT(f[kHaralickEnergy], 0.0);
    EXPECT_LE(f[kHaralickEnergy], 1.0);
    EXPECT_GT(f[kHaralickHomogeneity], 0.0);
    EXPECT_LE(f[kHaralickHomogeneity], 1.0);
  }
}

TEST(Compositional, Deterministic) {
  const auto img = random_image(40, 30, 11);
  EXPECT_EQ(extract_compositional(img), extract_compositional(img));
}

TEST(Compositional, TooSmall) {
  EXPECT_THROW(extract_compositional(RasterImage::filled(7, 8, 0, 0, 0)), novelty::ValidationError);
  EXPECT_THROW(extract_compositional(RasterImage::filled(8, 7, 0, 0, 0)), novelty::ValidationError);
  EXPECT_NO_THROW(extract_compositional(RasterImage::filled(8, 8, 0, 0, 0)));
}

TEST(Compositional, PureHueLandsInOneBin) {
  const auto f = extract_compositional(RasterImage::filled(16, 16, 255, 0, 0));
  EXPECT_DOUBLE_EQ(f[kMeanSaturation], 1.0);
  EXPECT_DOUBLE_EQ(f[kMeanBrightness], 1.0);
  EXPECT_DOUBLE_EQ(*std::max_element(f.begin() + kHueHistogram, f.begin() + kHueHistogram + kHueBins), 1.0);
  EXPECT_EQ(f[kUniqueHueCount], 1.0);
}

TEST(Compositional, FeatureNamesAreDistinct) {
  const auto& names = feature_names();
  std::set<std::string_view> unique(names.begin(), names.end());
  EXPECT_EQ(unique.size(), kCompositionalDim);
}

TEST(Haralick, CheckerboardContrast) {
  Eigen::MatrixXi q(8, 8);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) q(r, c) = (r + c) % 2 ? 255 : 0;
  }
  const Offset horizontal{1, 0};
  const auto f = haralick_from_glcm(cooccurrence(q, 256, {&horizontal, 1}));
  // Every horizontal neighbour pair differs.
  EXPECT_DOUBLE_EQ(f.contrast, 65025.0);
  const auto ref = oracle::haralick(q, 256, {{1, 0}});
  EXPECT_DOUBLE_EQ(f.contrast, ref.contrast);
  EXPECT_DOUBLE_EQ(f.entropy, ref.entropy);
  EXPECT_DOUBLE_EQ(f.energy, ref.energy);
  EXPECT_DOUBLE_EQ(f.homogeneity, ref.homogeneity);
}

TEST(Haralick, ConstantImage) {
  const Eigen::MatrixXi q = Eigen::MatrixXi::Constant(6, 5, 3);
  const auto f = haralick_features(q);
  EXPECT_EQ(f.entropy, 0.0);
  EXPECT_EQ(f.energy, 1.0);
  EXPECT_EQ(f.contrast, 0.0);
  EXPECT_EQ(f.homogeneity, 1.0);
}

TEST(Haralick, FourEqualCellsGiveLn4) {
  Eigen::MatrixXi q(2, 2);
  q << 0, 0, 1, 1;
  // (1,0) pairs fill the two diagonal cells, (0,1) pairs the off-diagonal ones.
  const Offset offsets[] = {{1, 0}, {0, 1}};
  const auto f = haralick_from_glcm(cooccurrence(q, 2, offsets));
  EXPECT_NEAR(f.entropy, std::log(4.0), 1e-15);
  EXPECT_NEAR(f.energy, 0.25, 1e-15);
}

TEST(Haralick, MatchesPairEnumeration) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int rows = 2 + trial % 7, cols = 2 + (trial * 3) % 6, levels = 2 + trial % 5;
    Eigen::MatrixXi q(rows, cols);
    for (int i = 0; i < q.size(); ++i) q(i) = static_cast<int>(rng() % levels);
    const auto got = haralick_features(q, levels);
    std::vector<std::pair<int, int>> offs;
    for (const auto& o : default_offsets()) offs.emplace_back(o.dx, o.dy);
    const auto ref = oracle::haralick(q, levels, offs);
    EXPECT_NEAR(got.entropy, ref.entropy, 1e-12);
    EXPECT_NEAR(got.energy, ref.energy, 1e-12);
    EXPECT_NEAR(got.homogeneity, ref.homogeneity, 1e-12);
    EXPECT_NEAR(got.contrast, ref.contrast, 1e-12);
  }
}

TEST(Haralick, GlcmIsSymmetricAndNormalized) {
  Eigen::MatrixXi q(5, 4);
  for (int i = 0; i < q.size(); ++i) q(i) = (i * 7) % 4;
  const auto p = cooccurrence(q, 4, default_offsets());
  EXPECT_NEAR(p.sum(), 1.0, 1e-12);
  EXPECT_LT((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Haralick, RejectsOutOfRangeLevels) {
  Eigen::MatrixXi q = Eigen::MatrixXi::Constant(3, 3, 4);
  EXPECT_ANY_THROW(haralick_features(q, 4));
}

TEST(Saliency, ConstantImageIsZero) {
  const auto map = spectral_saliency(Eigen::MatrixXd::Constant(16, 16, 77.0));
  EXPECT_EQ(map.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(count_salient_regions(map), 0);
  EXPECT_EQ(spectral_saliency(Eigen::MatrixXd::Zero(8, 8)).maxCoeff(), 0.0);
}

TEST(Saliency, BrightPixelAgreesWithDirectTransform) {
  Eigen::MatrixXd gray = Eigen::MatrixXd::Zero(24, 20);
  gray(9, 13) = 255.0;
  gray(2, 3) = 20.0;
  const auto map = spectral_saliency(gray);
  const auto ref = oracle::spectral_residual(gray);
  Eigen::Index r, c, rr, rc;
  map.maxCoeff(&r, &c);
  ref.maxCoeff(&rr, &rc);
  EXPECT_EQ(r, rr);
  EXPECT_EQ(c, rc);
  EXPECT_LE(std::abs(r - 9), 1);
  EXPECT_LE(std::abs(c - 13), 1);
  EXPECT_LT((map - ref).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_GE(map.minCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(map.maxCoeff(), 1.0);
}

TEST(Saliency, RegionCounting) {
  Eigen::MatrixXd map = Eigen::MatrixXd::Zero(10, 10);
  map(1, 1) = 1.0;
  map(1, 2) = 1.0;  // same region as (1,1)
  map(7, 7) = 1.0;
  map(8, 8) = 1.0;  // diagonal only, separate region
  EXPECT_EQ(count_salient_regions(map), 3);
}

TEST(Saliency, ResizeKeepsConstants) {
  const auto out = resize_bilinear(Eigen::MatrixXd::Constant(13, 7, 4.5), 64, 64);
  EXPECT_EQ(out.rows(), 64);
  EXPECT_NEAR(out.minCoeff(), 4.5, 1e-12);
  EXPECT_NEAR(out.maxCoeff(), 4.5, 1e-12);
}

TEST(Emotion, CornerValues) {
  const auto zero = emotional_dims(0, 0);
  EXPECT_EQ(zero.pleasure, 0.0);
  EXPECT_EQ(zero.arousal, 0.0);
  EXPECT_EQ(zero.dominance, 0.0);
  const auto one = emotional_dims(1, 1);
  EXPECT_NEAR(one.pleasure, 0.91, 1e-12);
  EXPECT_NEAR(one.arousal, 0.29, 1e-12);
  EXPECT_NEAR(one.dominance, 1.08, 1e-12);
}

TEST(Emotion, Linear) {
  const auto s = emotional_dims(1, 0), v = emotional_dims(0, 1), mix = emotional_dims(0.3, 0.6);
  EXPECT_NEAR(mix.pleasure, 0.3 * s.pleasure + 0.6 * v.pleasure, 1e-12);
  EXPECT_NEAR(mix.arousal, 0.3 * s.arousal + 0.6 * v.arousal, 1e-12);
  EXPECT_NEAR(mix.dominance, 0.3 * s.dominance + 0.6 * v.dominance, 1e-12);
}

TEST(Color, HsvPrimaries) {
  auto near = [](Hsv a, Hsv b) {
    return std::abs(a.h - b.h) < 1e-12 && std::abs(a.s - b.s) < 1e-12 && std::abs(a.v - b.v) < 1e-12;
  };
  EXPECT_TRUE(near(rgb_to_hsv(255, 0, 0), {0.0, 1.0, 1.0}));
  EXPECT_TRUE(near(rgb_to_hsv(0, 255, 0), {1.0 / 3, 1.0, 1.0}));
  EXPECT_TRUE(near(rgb_to_hsv(0, 0, 255), {2.0 / 3, 1.0, 1.0}));
  EXPECT_TRUE(near(rgb_to_hsv(0, 0, 0), {0.0, 0.0, 0.0}));
  EXPECT_TRUE(near(rgb_to_hsv(255, 0, 1), {1.0 - 1.0 / (6 * 255.0), 1.0, 1.0}));
}

TEST(Color, Grayscale) {
  const auto g = grayscale(RasterImage::filled(2, 2, 255, 255, 255));
  EXPECT_NEAR(g(0, 0), 255.0, 1e-9);
  EXPECT_NEAR(grayscale(RasterImage::filled(2, 2, 255, 0, 0))(1, 1), 0.299 * 255, 1e-9);
}
