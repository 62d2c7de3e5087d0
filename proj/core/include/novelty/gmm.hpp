#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace novelty::gmm {

/// Diagonal-covariance Gaussian mixture p(x) = sum_i w_i N(x; mu_i, diag(var_i)).
struct GaussianMixture {
  Eigen::VectorXd weights;    // N, on the simplex
  Eigen::MatrixXd means;      // N x d
  Eigen::MatrixXd variances;  // N x d, strictly positive

  std::size_t components() const { return static_cast<std::size_t>(weights.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(means.cols()); }

  // Throws ValidationError unless shapes agree, weights sum to 1 within
  // 1e-12 (after renormalization by the fitter) and variances are positive.
  void validate() const;
};

struct FitConfig {
  std::size_t components = 16;
  std::size_t max_iters = 200;
  double rel_tol = 1e-6;
  // Per-dimension floor, as a fraction of that dimension's data variance.
  double variance_floor = 1e-6;
  std::uint64_t seed = 7;
  // Project onto this many principal components before fitting.
  std::optional<std::size_t> pca_dim;
  unsigned threads = 1;
};

struct FitResult {
  GaussianMixture model;
  // Mean per-sample training log-likelihood, one entry per E-step.
  std::vector<double> log_likelihood;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t rescued_components = 0;
};

/// EM from a seeded k-means++ start. data is n x d with n >= components.
FitResult fit_gmm(const Eigen::MatrixXd& data, const FitConfig& cfg);

/// Seeded k-means++ centers (rows of data), exposed for testing.
Eigen::MatrixXd kmeans_plus_plus(const Eigen::MatrixXd& data, std::size_t k,
                                 std::uint64_t seed);

/// log N(x; mu_i, var_i) + log w_i for every component.
Eigen::VectorXd component_log_densities(const GaussianMixture& gm,
                                        const Eigen::Ref<const Eigen::VectorXd>& x);

/// log p(x) with log-sum-exp stabilization.
double log_pdf(const GaussianMixture& gm, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Posterior component memberships; sums to one.
Eigen::VectorXd responsibilities(const GaussianMixture& gm,
                                 const Eigen::Ref<const Eigen::VectorXd>& x);

/// Free parameters of a diagonal mixture: N(2d + 1) - 1.
std::size_t free_parameters(std::size_t components, std::size_t dim);

/// 2k - 2 log p(x).
double aic_per_image(const GaussianMixture& gm, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Linear projection x -> basis^T (x - mean) onto principal directions.
struct Projection {
  Eigen::VectorXd mean;   // D
  Eigen::MatrixXd basis;  // D x k, orthonormal columns
  Eigen::VectorXd explained_variance;  // k, descending

  std::size_t input_dim() const { return static_cast<std::size_t>(mean.size()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(basis.cols()); }

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& rows) const;
};

/// Principal directions of the centered rows, largest variance first. Each
/// direction's sign is fixed so its largest-magnitude loading is positive.
/// When the data has fewer than k nonzero directions the remaining columns
/// are still orthonormal but carry zero explained variance.
Projection fit_projection(const Eigen::MatrixXd& rows, std::size_t k);

}  // namespace novelty::gmm
