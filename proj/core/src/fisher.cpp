#include "novelty/fisher.hpp"

#include <algorithm>
#include <cmath>

#include "novelty/error.hpp"

namespace novelty::fisher {

using Eigen::Index;

FisherScore fisher_score(const gmm::GaussianMixture& gm,
                         const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::VectorXd gamma = gmm::responsibilities(gm, x);
  const auto n = static_cast<Index>(gm.components());
  const auto d = static_cast<Index>(gm.dim());
  FisherScore s{Eigen::MatrixXd(n, d), Eigen::MatrixXd(n, d)};
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) {
      const double var = gm.variances(i, j);
      const double sd = std::sqrt(var);
      const double diff = x(j) - gm.means(i, j);
      s.d_means(i, j) = gamma(i) * diff / var;
      s.d_stddevs(i, j) = gamma(i) * (diff * diff / (var * sd) - 1.0 / sd);
    }
  }
  return s;
}

FisherVector fisher_vector(const gmm::GaussianMixture& gm,
                           const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::VectorXd gamma = gmm::responsibilities(gm, x);
  const std::size_t n = gm.components();
  const std::size_t d = gm.dim();
  FisherVector fv{Eigen::VectorXd(static_cast<Index>(2 * n * d)), n, d};
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Index>(i);
    const double w = gm.weights(row);
    const double mean_scale = gamma(row) / std::sqrt(w);
    const double var_scale = gamma(row) / std::sqrt(2.0 * w);
    for (std::size_t j = 0; j < d; ++j) {
      const auto col = static_cast<Index>(j);
      const double z = (x(col) - gm.means(row, col)) / std::sqrt(gm.variances(row, col));
      fv.values(static_cast<Index>(i * d + j)) = mean_scale * z;
      fv.values(static_cast<Index>((n + i) * d + j)) = var_scale * (z * z - 1.0);
    }
  }
  return fv;
}

double fisher_kernel(const gmm::GaussianMixture& gm,
                     const Eigen::Ref<const Eigen::VectorXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& y) {
  return fisher_vector(gm, x).values.dot(fisher_vector(gm, y).values);
}

NormStats NormStats::from(std::span<const double> values) {
  if (values.empty()) return {};
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {*lo, *hi};
}

double NormStats::scale(double v) const {
  if (!(max > min)) return 0.0;
  return std::clamp((v - min) / (max - min), 0.0, 1.0);
}

NoveltyScore fvgmm_novelty(const gmm::GaussianMixture& gm,
                           const Eigen::Ref<const Eigen::VectorXd>& x,
                           const NormStats& norm_stats) {
  const double raw = fisher_vector(gm, x).values.norm();
  return {raw, norm_stats.scale(raw)};
}

MrfReference estimate_mrf_reference(const gmm::GaussianMixture& gm,
                                    const Eigen::MatrixXd& window) {
  if (window.cols() != static_cast<Index>(gm.dim())) {
    throw DimensionMismatch(gm.dim(), static_cast<std::size_t>(window.cols()));
  }
  if (window.rows() < 1) throw ValidationError("MRF reference needs at least one row");
  const Index n = gm.means.rows();
  MrfReference ref{gm.means, Eigen::VectorXd(n), Eigen::VectorXd(n)};
  const auto rows = static_cast<double>(window.rows());
  for (Index i = 0; i < n; ++i) {
    Eigen::VectorXd dist(window.rows());
    for (Index r = 0; r < window.rows(); ++r) {
      dist(r) = (window.row(r) - gm.means.row(i)).norm();
    }
    const double mean = dist.sum() / rows;
    const double var = (dist.array() - mean).square().sum() / rows;
    ref.mean_distance(i) = mean;
    ref.stddev_distance(i) = std::max(std::sqrt(var), MrfReference::kMinStddev);
  }
  return ref;
}

MrfNovelty fvmrf_novelty(const MrfReference& ref,
                         const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (static_cast<std::size_t>(x.size()) != ref.dim()) {
    throw DimensionMismatch(ref.dim(), static_cast<std::size_t>(x.size()));
  }
  const Index n = ref.means.rows();
  MrfNovelty out{Eigen::VectorXd(n), 0.0};
  for (Index i = 0; i < n; ++i) {
    const double d = (x.transpose() - ref.means.row(i)).norm();
    out.standardized(i) = (d - ref.mean_distance(i)) / ref.stddev_distance(i);
  }
  out.score = out.standardized.norm() / std::sqrt(static_cast<double>(n));
  return out;
}

}  // namespace novelty::fisher
