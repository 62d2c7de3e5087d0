#include <cmath>
#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "novelty/error.hpp"
#include "novelty/imgfeat.hpp"

namespace novelty::img {
namespace {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

// Separable 2-D transform: rows, then columns.
ComplexMatrix fft2(const ComplexMatrix& in, bool inverse) {
  Eigen::FFT<double> fft;
  ComplexMatrix out = in;
  std::vector<Complex> src;
  std::vector<Complex> dst;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    src.assign(out.cols(), {});
    for (Eigen::Index c = 0; c < out.cols(); ++c) src[c] = out(r, c);
    if (inverse) {
      fft.inv(dst, src);
    } else {
      fft.fwd(dst, src);
    }
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = dst[c];
  }
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    src.assign(out.rows(), {});
    for (Eigen::Index r = 0; r < out.rows(); ++r) src[r] = out(r, c);
    if (inverse) {
      fft.inv(dst, src);
    } else {
      fft.fwd(dst, src);
    }
    for (Eigen::Index r = 0; r < out.rows(); ++r) out(r, c) = dst[r];
  }
  return out;
}

Eigen::Index wrap(Eigen::Index i, Eigen::Index n) { return ((i % n) + n) % n; }

Eigen::Index clamp_index(Eigen::Index i, Eigen::Index n) {
  return i < 0 ? 0 : (i >= n ? n - 1 : i);
}

// The spectrum is periodic, so the box filter wraps around.
Eigen::MatrixXd box3_periodic(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double s = 0.0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          s += m(wrap(r + dr, m.rows()), wrap(c + dc, m.cols()));
        }
      }
      out(r, c) = s / 9.0;
    }
  }
  return out;
}

Eigen::MatrixXd gaussian5_clamped(const Eigen::MatrixXd& m, double sigma) {
  double kernel[5];
  double total = 0.0;
  for (int k = -2; k <= 2; ++k) {
    kernel[k + 2] = std::exp(-(k * k) / (2.0 * sigma * sigma));
    total += kernel[k + 2];
  }
  for (double& w : kernel) w /= total;

  Eigen::MatrixXd tmp(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double s = 0.0;
      for (int k = -2; k <= 2; ++k) s += kernel[k + 2] * m(r, clamp_index(c + k, m.cols()));
      tmp(r, c) = s;
    }
  }
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double s = 0.0;
      for (int k = -2; k <= 2; ++k) s += kernel[k + 2] * tmp(clamp_index(r + k, m.rows()), c);
      out(r, c) = s;
    }
  }
  return out;
}

}  // namespace

Eigen::MatrixXd resize_bilinear(const Eigen::MatrixXd& src, int rows, int cols) {
  if (src.size() == 0 || rows <= 0 || cols <= 0) {
    throw ValidationError("resize of an empty matrix");
  }
  Eigen::MatrixXd out(rows, cols);
  const double sy = static_cast<double>(src.rows()) / rows;
  const double sx = static_cast<double>(src.cols()) / cols;
  for (int r = 0; r < rows; ++r) {
    double fy = (r + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(src.rows() - 1));
    const auto y0 = static_cast<Eigen::Index>(std::floor(fy));
    const Eigen::Index y1 = std::min<Eigen::Index>(y0 + 1, src.rows() - 1);
    const double wy = fy - static_cast<double>(y0);
    for (int c = 0; c < cols; ++c) {
      double fx = (c + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(src.cols() - 1));
      const auto x0 = static_cast<Eigen::Index>(std::floor(fx));
      const Eigen::Index x1 = std::min<Eigen::Index>(x0 + 1, src.cols() - 1);
      const double wx = fx - static_cast<double>(x0);
      const double top = src(y0, x0) + wx * (src(y0, x1) - src(y0, x0));
      const double bottom = src(y1, x0) + wx * (src(y1, x1) - src(y1, x0));
      out(r, c) = top + wy * (bottom - top);
    }
  }
  return out;
}

Eigen::MatrixXd spectral_saliency(const Eigen::MatrixXd& gray) {
  if (gray.size() == 0) throw ValidationError("empty saliency input");
  const double hi = gray.maxCoeff();
  const double lo = gray.minCoeff();
  if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) {
    return Eigen::MatrixXd::Zero(gray.rows(), gray.cols());
  }

  const ComplexMatrix spectrum = fft2(gray.cast<Complex>(), false);
  Eigen::MatrixXd log_amplitude(gray.rows(), gray.cols());
  Eigen::MatrixXd phase(gray.rows(), gray.cols());
  const double amp_floor = 1e-12 * spectrum.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    log_amplitude(i) = std::log(std::max(std::abs(spectrum(i)), amp_floor));
    phase(i) = std::arg(spectrum(i));
  }
  const Eigen::MatrixXd residual = log_amplitude - box3_periodic(log_amplitude);

  ComplexMatrix rebuilt(gray.rows(), gray.cols());
  for (Eigen::Index i = 0; i < rebuilt.size(); ++i) {
    rebuilt(i) = std::polar(std::exp(residual(i)), phase(i));
  }
  const ComplexMatrix back = fft2(rebuilt, true);
  Eigen::MatrixXd energy(gray.rows(), gray.cols());
  for (Eigen::Index i = 0; i < back.size(); ++i) energy(i) = std::norm(back(i));

  Eigen::MatrixXd map = gaussian5_clamped(energy, 2.5);
  const double peak = map.maxCoeff();
  if (!(peak > 0.0)) return Eigen::MatrixXd::Zero(gray.rows(), gray.cols());
  map /= peak;
  return map.cwiseMax(0.0).cwiseMin(1.0);
}

int count_salient_regions(const Eigen::MatrixXd& map) {
  if (map.size() == 0) return 0;
  const double threshold = 3.0 * map.mean();
  const Eigen::Index rows = map.rows();
  const Eigen::Index cols = map.cols();
  std::vector<char> visited(static_cast<std::size_t>(map.size()), 0);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> stack;
  int regions = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto idx = static_cast<std::size_t>(r * cols + c);
      if (visited[idx] || !(map(r, c) > threshold)) continue;
      ++regions;
      visited[idx] = 1;
      stack.emplace_back(r, c);
      while (!stack.empty()) {
        const auto [y, x] = stack.back();
        stack.pop_back();
        constexpr int kDy[4] = {-1, 1, 0, 0};
        constexpr int kDx[4] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          const Eigen::Index ny = y + kDy[k];
          const Eigen::Index nx = x + kDx[k];
          if (ny < 0 || ny >= rows || nx < 0 || nx >= cols) continue;
          const auto nidx = static_cast<std::size_t>(ny * cols + nx);
          if (visited[nidx] || !(map(ny, nx) > threshold)) continue;
          visited[nidx] = 1;
          stack.emplace_back(ny, nx);
        }
      }
    }
  }
  return regions;
}

}  // namespace novelty::img
