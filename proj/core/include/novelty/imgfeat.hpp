#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace novelty::img {

/// Row-major 8-bit RGB raster.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // width * height * 3

  RasterImage() = default;
  RasterImage(int w, int h, std::vector<std::uint8_t> pixels);

  static RasterImage filled(int w, int h, std::uint8_t r, std::uint8_t g,
                            std::uint8_t b);

  std::uint8_t at(int row, int col, int channel) const {
    return rgb[(static_cast<std::size_t>(row) * width + col) * 3 + channel];
  }
  std::uint8_t& at(int row, int col, int channel) {
    return rgb[(static_cast<std::size_t>(row) * width + col) * 3 + channel];
  }
};

RasterImage mirror_horizontal(const RasterImage& img);

/// Decodes PNG, JPEG or GIF (first frame) by sniffing the file signature.
RasterImage decode_image(const std::filesystem::path& path);
RasterImage decode_image(std::span<const std::uint8_t> bytes);

inline constexpr std::size_t kCompositionalDim = 47;

/// Index layout of the compositional vector. Group boundaries are fixed;
/// the names are exported with every compositional pack's documentation.
enum Feature : std::size_t {
  kLuminanceContrast = 0,
  kMeanHue = 1,
  kMeanSaturation = 2,
  kMeanBrightness = 3,
  kCenterMeanHue = 4,
  kCenterMeanSaturation = 5,
  kCenterMeanBrightness = 6,
  kStdHue = 7,
  kStdSaturation = 8,
  kStdBrightness = 9,
  kPleasure = 10,
  kArousal = 11,
  kDominance = 12,
  kHueHistogram = 13,         // 12 bins
  kSaturationHistogram = 25,  // 5 bins
  kBrightnessHistogram = 30,  // 3 bins
  kIttenHueContrast = 33,
  kIttenSaturationContrast = 34,
  kIttenBrightnessContrast = 35,
  kSaliencyMean = 36,
  kSaliencyMax = 37,
  kSaliencyStd = 38,
  kSalientRegionCount = 39,
  kSymmetry = 40,
  kHaralickEntropy = 41,
  kHaralickEnergy = 42,
  kHaralickHomogeneity = 43,
  kHaralickContrast = 44,
  kColorfulness = 45,
  kUniqueHueCount = 46,
};

inline constexpr std::size_t kHueBins = 12;
inline constexpr std::size_t kSaturationBins = 5;
inline constexpr std::size_t kBrightnessBins = 3;

using CompositionalFeatures = std::array<double, kCompositionalDim>;

/// Human-readable name for each of the 47 entries.
const std::array<std::string_view, kCompositionalDim>& feature_names();

/// Throws ValidationError when either side is below 8 px.
CompositionalFeatures extract_compositional(const RasterImage& img);

// Texture ------------------------------------------------------------------

struct Offset {
  int dx;  // column step
  int dy;  // row step
};

/// Offsets averaged by haralick_features: (1,0), (0,1), (1,1), (1,-1).
std::span<const Offset> default_offsets();

/// Symmetric, normalized gray-level co-occurrence matrix averaged over the
/// given offsets. Values must lie in [0, levels). Offsets that produce no
/// pixel pairs are skipped; throws if none produce any.
Eigen::MatrixXd cooccurrence(const Eigen::MatrixXi& quantized, int levels,
                             std::span<const Offset> offsets);

struct HaralickFeatures {
  double entropy = 0.0;
  double energy = 0.0;
  double homogeneity = 0.0;
  double contrast = 0.0;
};

HaralickFeatures haralick_from_glcm(const Eigen::MatrixXd& glcm);

/// Entropy (natural log), energy, homogeneity and contrast of the averaged
/// co-occurrence matrix.
HaralickFeatures haralick_features(const Eigen::MatrixXi& quantized,
                                   int levels = 32);

// Saliency -----------------------------------------------------------------

inline constexpr int kSaliencySize = 64;

/// Spectral residual saliency. Input is a grayscale matrix (any scale);
/// output has the same shape with values in [0, 1]. A constant input yields
/// an all-zero map.
Eigen::MatrixXd spectral_saliency(const Eigen::MatrixXd& gray);

/// 4-connected components of pixels strictly above 3 * mean(map).
int count_salient_regions(const Eigen::MatrixXd& map);

/// Bilinear resampling with pixel-center alignment.
Eigen::MatrixXd resize_bilinear(const Eigen::MatrixXd& src, int rows, int cols);

// Affect -------------------------------------------------------------------

struct EmotionalDims {
  double pleasure = 0.0;
  double arousal = 0.0;
  double dominance = 0.0;
};

/// Linear pleasure/arousal/dominance model over mean saturation and mean
/// brightness, both in [0, 1].
EmotionalDims emotional_dims(double mean_saturation, double mean_brightness);

// Helpers shared with the extractor ------------------------------------------

/// Rec. 601 luma in [0, 255].
Eigen::MatrixXd grayscale(const RasterImage& img);

struct Hsv {
  double h;  // [0, 1), meaningless when s == 0
  double s;  // [0, 1]
  double v;  // [0, 1]
};

Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);

}  // namespace novelty::img
