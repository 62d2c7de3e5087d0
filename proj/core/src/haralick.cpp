#include <array>
#include <cmath>

#include "novelty/error.hpp"
#include "novelty/imgfeat.hpp"

namespace novelty::img {

namespace {
constexpr std::array<Offset, 4> kDefaultOffsets{{{1, 0}, {0, 1}, {1, 1}, {1, -1}}};
}  // namespace

std::span<const Offset> default_offsets() { return kDefaultOffsets; }

Eigen::MatrixXd cooccurrence(const Eigen::MatrixXi& quantized, int levels,
                             std::span<const Offset> offsets) {
  if (quantized.size() == 0) throw ValidationError("empty gray-level matrix");
  if (levels <= 0) throw ValidationError("gray levels must be positive");
  if (quantized.minCoeff() < 0 || quantized.maxCoeff() >= levels) {
    throw ValidationError("gray level outside [0, levels)");
  }
  const auto rows = static_cast<int>(quantized.rows());
  const auto cols = static_cast<int>(quantized.cols());

  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(levels, levels);
  int used = 0;
  for (const Offset& off : offsets) {
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(levels, levels);
    double pairs = 0.0;
    for (int r = 0; r < rows; ++r) {
      const int r2 = r + off.dy;
      if (r2 < 0 || r2 >= rows) continue;
      for (int c = 0; c < cols; ++c) {
        const int c2 = c + off.dx;
        if (c2 < 0 || c2 >= cols) continue;
        const int a = quantized(r, c);
        const int b = quantized(r2, c2);
        counts(a, b) += 1.0;
        counts(b, a) += 1.0;
        pairs += 2.0;
      }
    }
    if (pairs == 0.0) continue;
    sum += counts / pairs;
    ++used;
  }
  if (used == 0) throw ValidationError("gray-level matrix too small for any offset");
  return sum / static_cast<double>(used);
}

HaralickFeatures haralick_from_glcm(const Eigen::MatrixXd& glcm) {
  HaralickFeatures f;
  for (Eigen::Index i = 0; i < glcm.rows(); ++i) {
    for (Eigen::Index j = 0; j < glcm.cols(); ++j) {
      const double p = glcm(i, j);
      if (p <= 0.0) continue;
      const double diff = static_cast<double>(i - j);
      f.entropy -= p * std::log(p);
      f.energy += p * p;
      f.homogeneity += p / (1.0 + std::abs(diff));
      f.contrast += diff * diff * p;
    }
  }
  // -sum p log p of a point mass is -1*log(1) = -0.0; report +0.
  if (f.entropy <= 0.0) f.entropy = 0.0;
  return f;
}

HaralickFeatures haralick_features(const Eigen::MatrixXi& quantized, int levels) {
  return haralick_from_glcm(cooccurrence(quantized, levels, default_offsets()));
}

}  // namespace novelty::img
