#include "novelty/imgfeat.hpp"

#include <algorithm>
#include <cmath>

#include "novelty/error.hpp"

namespace novelty::img {
namespace {

constexpr int kMinSide = 8;
constexpr int kHaralickLevels = 32;
constexpr int kHueCountBins = 20;
constexpr double kHueCountAlpha = 0.05;

// Welford accumulator; a constant stream has exactly zero spread.
struct Moments {
  double running_mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;

  void add(double v) {
    ++n;
    const double delta = v - running_mean;
    running_mean += delta / static_cast<double>(n);
    m2 += delta * (v - running_mean);
  }
  double mean() const { return running_mean; }
  double stddev() const {
    if (n == 0) return 0.0;
    return std::sqrt(std::max(0.0, m2 / static_cast<double>(n)));
  }
};

template <std::size_t N>
double population_std(const double (&bins)[N]) {
  double mean = 0.0;
  for (double b : bins) mean += b;
  mean /= static_cast<double>(N);
  double var = 0.0;
  for (double b : bins) var += (b - mean) * (b - mean);
  return std::sqrt(var / static_cast<double>(N));
}

std::size_t saturation_bin(double s) {
  if (s < 0.2) return 0;
  if (s < 0.4) return 1;
  if (s < 0.6) return 2;
  if (s < 0.8) return 3;
  return 4;
}

std::size_t brightness_bin(double v) {
  if (v < 1.0 / 3.0) return 0;
  if (v < 2.0 / 3.0) return 1;
  return 2;
}

std::size_t uniform_bin(double h, std::size_t bins) {
  return std::min(bins - 1, static_cast<std::size_t>(h * static_cast<double>(bins)));
}

constexpr std::array<std::string_view, kCompositionalDim> kNames{
    "luminance_contrast",
    "mean_hue",
    "mean_saturation",
    "mean_brightness",
    "center_mean_hue",
    "center_mean_saturation",
    "center_mean_brightness",
    "std_hue",
    "std_saturation",
    "std_brightness",
    "pleasure",
    "arousal",
    "dominance",
    "itten_hue_00",
    "itten_hue_01",
    "itten_hue_02",
    "itten_hue_03",
    "itten_hue_04",
    "itten_hue_05",
    "itten_hue_06",
    "itten_hue_07",
    "itten_hue_08",
    "itten_hue_09",
    "itten_hue_10",
    "itten_hue_11",
    "itten_saturation_0",
    "itten_saturation_1",
    "itten_saturation_2",
    "itten_saturation_3",
    "itten_saturation_4",
    "itten_brightness_0",
    "itten_brightness_1",
    "itten_brightness_2",
    "itten_hue_contrast",
    "itten_saturation_contrast",
    "itten_brightness_contrast",
    "saliency_mean",
    "saliency_max",
    "saliency_std",
    "salient_region_count",
    "symmetry",
    "haralick_entropy",
    "haralick_energy",
    "haralick_homogeneity",
    "haralick_contrast",
    "colorfulness",
    "unique_hue_count",
};

}  // namespace

RasterImage::RasterImage(int w, int h, std::vector<std::uint8_t> pixels)
    : width(w), height(h), rgb(std::move(pixels)) {
  if (w <= 0 || h <= 0) throw ValidationError("image dimensions must be positive");
  if (rgb.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3) {
    throw ValidationError("pixel buffer does not hold width*height RGB triples");
  }
}

RasterImage RasterImage::filled(int w, int h, std::uint8_t r, std::uint8_t g,
                                std::uint8_t b) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < px.size(); i += 3) {
    px[i] = r;
    px[i + 1] = g;
    px[i + 2] = b;
  }
  return RasterImage(w, h, std::move(px));
}

RasterImage mirror_horizontal(const RasterImage& img) {
  RasterImage out = img;
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      for (int k = 0; k < 3; ++k) out.at(r, c, k) = img.at(r, img.width - 1 - c, k);
    }
  }
  return out;
}

const std::array<std::string_view, kCompositionalDim>& feature_names() { return kNames; }

Hsv rgb_to_hsv(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const double r = r8 / 255.0;
  const double g = g8 / 255.0;
  const double b = b8 / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out{0.0, mx > 0.0 ? delta / mx : 0.0, mx};
  if (delta <= 0.0) return out;
  double h;
  if (mx == r) {
    h = (g - b) / delta;
    if (h < 0.0) h += 6.0;
  } else if (mx == g) {
    h = (b - r) / delta + 2.0;
  } else {
    h = (r - g) / delta + 4.0;
  }
  out.h = h / 6.0;
  if (out.h >= 1.0) out.h -= 1.0;
  return out;
}

Eigen::MatrixXd grayscale(const RasterImage& img) {
  Eigen::MatrixXd gray(img.height, img.width);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      gray(r, c) = 0.299 * img.at(r, c, 0) + 0.587 * img.at(r, c, 1) +
                   0.114 * img.at(r, c, 2);
    }
  }
  return gray;
}

EmotionalDims emotional_dims(double s, double v) {
  if (!(s >= 0.0 && s <= 1.0) || !(v >= 0.0 && v <= 1.0)) {
    throw ValidationError("emotional_dims expects saturation and brightness in [0, 1]");
  }
  return {0.69 * v + 0.22 * s, -0.31 * v + 0.60 * s, 0.76 * v + 0.32 * s};
}

CompositionalFeatures extract_compositional(const RasterImage& img) {
  if (img.width < kMinSide || img.height < kMinSide) {
    throw ValidationError("image too small: " + std::to_string(img.width) + "x" +
                          std::to_string(img.height) + " (minimum 8x8)");
  }
  CompositionalFeatures f{};

  const int r0 = img.height / 3;
  const int r1 = 2 * img.height / 3;
  const int c0 = img.width / 3;
  const int c1 = 2 * img.width / 3;

  Moments luma_m;
  Moments hue_m;
  Moments sat_m;
  Moments val_m;
  Moments center_hue;
  Moments center_sat;
  Moments center_val;
  Moments rg_m;
  Moments yb_m;
  double hue_hist[kHueBins] = {};
  double sat_hist[kSaturationBins] = {};
  double val_hist[kBrightnessBins] = {};
  double hue_count_hist[kHueCountBins] = {};

  const Eigen::MatrixXd gray = grayscale(img);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const std::uint8_t R = img.at(r, c, 0);
      const std::uint8_t G = img.at(r, c, 1);
      const std::uint8_t B = img.at(r, c, 2);
      const Hsv hsv = rgb_to_hsv(R, G, B);
      const bool in_center = r >= r0 && r < r1 && c >= c0 && c < c1;

      luma_m.add(gray(r, c) / 255.0);
      sat_m.add(hsv.s);
      val_m.add(hsv.v);
      sat_hist[saturation_bin(hsv.s)] += 1.0;
      val_hist[brightness_bin(hsv.v)] += 1.0;
      if (hsv.s > 0.0) {
        hue_m.add(hsv.h);
        hue_hist[uniform_bin(hsv.h, kHueBins)] += 1.0;
        hue_count_hist[uniform_bin(hsv.h, kHueCountBins)] += 1.0;
      }
      if (in_center) {
        center_sat.add(hsv.s);
        center_val.add(hsv.v);
        if (hsv.s > 0.0) center_hue.add(hsv.h);
      }
      rg_m.add(static_cast<double>(R) - G);
      yb_m.add(0.5 * (static_cast<double>(R) + G) - B);
    }
  }

  const double pixels = static_cast<double>(img.width) * img.height;
  f[kLuminanceContrast] = luma_m.stddev();
  f[kMeanHue] = hue_m.mean();
  f[kMeanSaturation] = sat_m.mean();
  f[kMeanBrightness] = val_m.mean();
  f[kCenterMeanHue] = center_hue.mean();
  f[kCenterMeanSaturation] = center_sat.mean();
  f[kCenterMeanBrightness] = center_val.mean();
  f[kStdHue] = hue_m.stddev();
  f[kStdSaturation] = sat_m.stddev();
  f[kStdBrightness] = val_m.stddev();

  const EmotionalDims pad = emotional_dims(std::clamp(f[kMeanSaturation], 0.0, 1.0),
                                           std::clamp(f[kMeanBrightness], 0.0, 1.0));
  f[kPleasure] = pad.pleasure;
  f[kArousal] = pad.arousal;
  f[kDominance] = pad.dominance;

  // Fully achromatic images put all hue mass at hue 0, matching mean hue 0.
  if (hue_m.n == 0) {
    hue_hist[0] = 1.0;
  } else {
    for (double& b : hue_hist) b /= static_cast<double>(hue_m.n);
  }
  for (double& b : sat_hist) b /= pixels;
  for (double& b : val_hist) b /= pixels;
  for (std::size_t i = 0; i < kHueBins; ++i) f[kHueHistogram + i] = hue_hist[i];
  for (std::size_t i = 0; i < kSaturationBins; ++i) f[kSaturationHistogram + i] = sat_hist[i];
  for (std::size_t i = 0; i < kBrightnessBins; ++i) f[kBrightnessHistogram + i] = val_hist[i];
  f[kIttenHueContrast] = population_std(hue_hist);
  f[kIttenSaturationContrast] = population_std(sat_hist);
  f[kIttenBrightnessContrast] = population_std(val_hist);

  const Eigen::MatrixXd small = resize_bilinear(gray, kSaliencySize, kSaliencySize);
  const Eigen::MatrixXd saliency = spectral_saliency(small);
  const double sal_mean = saliency.mean();
  f[kSaliencyMean] = sal_mean;
  f[kSaliencyMax] = saliency.maxCoeff();
  f[kSaliencyStd] = std::sqrt((saliency.array() - sal_mean).square().mean());
  f[kSalientRegionCount] = count_salient_regions(saliency);

  double asymmetry = 0.0;
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      asymmetry += std::abs(gray(r, c) - gray(r, img.width - 1 - c));
    }
  }
  f[kSymmetry] = std::clamp(1.0 - asymmetry / pixels / 255.0, 0.0, 1.0);

  Eigen::MatrixXi quantized(img.height, img.width);
  for (Eigen::Index i = 0; i < gray.size(); ++i) {
    quantized(i) = std::min(kHaralickLevels - 1,
                            static_cast<int>(gray(i) * kHaralickLevels / 256.0));
  }
  const HaralickFeatures tex = haralick_features(quantized, kHaralickLevels);
  f[kHaralickEntropy] = tex.entropy;
  f[kHaralickEnergy] = tex.energy;
  f[kHaralickHomogeneity] = tex.homogeneity;
  f[kHaralickContrast] = tex.contrast;

  const double sigma_rg = rg_m.stddev();
  const double sigma_yb = yb_m.stddev();
  const double mu_rg = rg_m.mean();
  const double mu_yb = yb_m.mean();
  f[kColorfulness] = std::sqrt(sigma_rg * sigma_rg + sigma_yb * sigma_yb) +
                     0.3 * std::sqrt(mu_rg * mu_rg + mu_yb * mu_yb);

  const double peak = *std::max_element(std::begin(hue_count_hist), std::end(hue_count_hist));
  int unique_hues = 0;
  if (peak > 0.0) {
    for (double b : hue_count_hist) {
      if (b > kHueCountAlpha * peak) ++unique_hues;
    }
  }
  f[kUniqueHueCount] = unique_hues;
  return f;
}

}  // namespace novelty::img
