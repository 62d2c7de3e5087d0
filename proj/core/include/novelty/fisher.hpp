#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Core>

#include "novelty/gmm.hpp"

namespace novelty::fisher {

/// Gradient of log p(x) with respect to the component means and the
/// component standard deviations (not variances), before any Fisher
/// information scaling. Rows are components.
struct FisherScore {
  Eigen::MatrixXd d_means;    // N x d
  Eigen::MatrixXd d_stddevs;  // N x d
};

FisherScore fisher_score(const gmm::GaussianMixture& gm,
                         const Eigen::Ref<const Eigen::VectorXd>& x);

/// Fisher vector under the diagonal closed-form approximation of the Fisher
/// information. Layout: all mean-gradient blocks (component order), then all
/// variance-gradient blocks; total length 2 * N * d.
struct FisherVector {
  Eigen::VectorXd values;
  std::size_t components = 0;
  std::size_t dim = 0;

  Eigen::VectorXd::ConstSegmentReturnType mean_block(std::size_t i) const {
    return values.segment(static_cast<Eigen::Index>(i * dim), static_cast<Eigen::Index>(dim));
  }
  Eigen::VectorXd::ConstSegmentReturnType variance_block(std::size_t i) const {
    return values.segment(static_cast<Eigen::Index>((components + i) * dim),
                          static_cast<Eigen::Index>(dim));
  }
};

FisherVector fisher_vector(const gmm::GaussianMixture& gm,
                           const Eigen::Ref<const Eigen::VectorXd>& x);

/// Scalar product of the two Fisher vectors.
double fisher_kernel(const gmm::GaussianMixture& gm,
                     const Eigen::Ref<const Eigen::VectorXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& y);

/// Min/max of a novelty statistic over a training window, for min-max
/// scaling of later scores.
struct NormStats {
  double min = 0.0;
  double max = 0.0;

  static NormStats from(std::span<const double> values);
  // clamp((v - min) / (max - min), 0, 1); 0 when max == min.
  double scale(double v) const;
};

struct NoveltyScore {
  double raw = 0.0;
  double scaled = 0.0;
};

/// Euclidean norm of the Fisher vector, plus its min-max scaled value.
NoveltyScore fvgmm_novelty(const gmm::GaussianMixture& gm,
                           const Eigen::Ref<const Eigen::VectorXd>& x,
                           const NormStats& norm_stats);

/// Component means plus the window statistics of the distances to them.
struct MrfReference {
  Eigen::MatrixXd means;               // N x d
  Eigen::VectorXd mean_distance;       // N
  Eigen::VectorXd stddev_distance;     // N, floored at kMinStddev

  static constexpr double kMinStddev = 1e-12;

  std::size_t components() const { return static_cast<std::size_t>(means.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(means.cols()); }
};

/// Estimates E[d_i] and the population standard deviation of d_i over the
/// rows of window, with d_i(x) = ||x - mu_i||.
MrfReference estimate_mrf_reference(const gmm::GaussianMixture& gm,
                                    const Eigen::MatrixXd& window);

struct MrfNovelty {
  Eigen::VectorXd standardized;  // (d_i(x) - E[d_i]) / Std[d_i]
  double score = 0.0;            // ||standardized|| / sqrt(N)
};

MrfNovelty fvmrf_novelty(const MrfReference& ref,
                         const Eigen::Ref<const Eigen::VectorXd>& x);

}  // namespace novelty::fisher
