#include "novelty/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "novelty/error.hpp"
#include "novelty/parallel.hpp"
#include "novelty/random.hpp"

namespace novelty::gmm {
namespace {

using Eigen::Index;

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kRescueWeight = 1e-8;
constexpr std::size_t kLloydIters = 10;

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

void check_dim(const GaussianMixture& gm, Index size) {
  if (static_cast<std::size_t>(size) != gm.dim()) {
    throw DimensionMismatch(gm.dim(), static_cast<std::size_t>(size));
  }
}

// Per-component log w_i - 0.5 * sum_j log(2 pi var_ij), and 1/var.
struct Precomputed {
  Eigen::VectorXd log_norm;
  Eigen::MatrixXd inv_var;

  explicit Precomputed(const GaussianMixture& gm)
      : log_norm(gm.weights.size()), inv_var(gm.variances.cwiseInverse()) {
    const double d = static_cast<double>(gm.dim());
    for (Index i = 0; i < gm.weights.size(); ++i) {
      log_norm(i) = std::log(gm.weights(i)) -
                    0.5 * (d * kLog2Pi + gm.variances.row(i).array().log().sum());
    }
  }

  void log_densities(const GaussianMixture& gm,
                     const Eigen::Ref<const Eigen::RowVectorXd>& x,
                     Eigen::Ref<Eigen::RowVectorXd> out) const {
    for (Index i = 0; i < gm.means.rows(); ++i) {
      const double maha =
          ((x - gm.means.row(i)).array().square() * inv_var.row(i).array()).sum();
      out(i) = log_norm(i) - 0.5 * maha;
    }
  }
};

Eigen::RowVectorXd column_variance(const Eigen::MatrixXd& data) {
  const Eigen::RowVectorXd mean = data.colwise().mean();
  return (data.rowwise() - mean).array().square().colwise().mean();
}

Eigen::VectorXi assign_nearest(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centers) {
  Eigen::VectorXi labels(data.rows());
  for (Index r = 0; r < data.rows(); ++r) {
    Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < centers.rows(); ++k) {
      const double d = (data.row(r) - centers.row(k)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    labels(r) = static_cast<int>(best);
  }
  return labels;
}

}  // namespace

void GaussianMixture::validate() const {
  const Index n = weights.size();
  if (n < 1) throw ValidationError("mixture needs at least one component");
  if (means.rows() != n || variances.rows() != n || variances.cols() != means.cols()) {
    throw ValidationError("mixture parameter shapes disagree");
  }
  if (means.cols() < 1) throw ValidationError("mixture dimension must be positive");
  if (!weights.allFinite() || !means.allFinite() || !variances.allFinite()) {
    throw ValidationError("mixture parameters must be finite");
  }
  if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-12) {
    throw ValidationError("mixture weights must lie on the simplex");
  }
  if ((variances.array() <= 0.0).any()) {
    throw ValidationError("mixture variances must be positive");
  }
}

Eigen::VectorXd component_log_densities(const GaussianMixture& gm,
                                        const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_dim(gm, x.size());
  Eigen::VectorXd out(gm.weights.size());
  for (Index i = 0; i < gm.weights.size(); ++i) {
    double acc = 0.0;
    for (Index j = 0; j < x.size(); ++j) {
      const double v = gm.variances(i, j);
      const double diff = x(j) - gm.means(i, j);
      acc += std::log(v) + diff * diff / v;
    }
    out(i) = std::log(gm.weights(i)) - 0.5 * (static_cast<double>(x.size()) * kLog2Pi + acc);
  }
  return out;
}

double log_pdf(const GaussianMixture& gm, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return log_sum_exp(component_log_densities(gm, x));
}

Eigen::VectorXd responsibilities(const GaussianMixture& gm,
                                 const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::VectorXd logs = component_log_densities(gm, x);
  const double total = log_sum_exp(logs);
  Eigen::VectorXd gamma = (logs.array() - total).exp();
  return gamma / gamma.sum();
}

std::size_t free_parameters(std::size_t components, std::size_t dim) {
  return components * (2 * dim + 1) - 1;
}

double aic_per_image(const GaussianMixture& gm, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double k = static_cast<double>(free_parameters(gm.components(), gm.dim()));
  return 2.0 * k - 2.0 * log_pdf(gm, x);
}

Eigen::MatrixXd kmeans_plus_plus(const Eigen::MatrixXd& data, std::size_t k,
                                 std::uint64_t seed) {
  const auto n = static_cast<std::uint64_t>(data.rows());
  if (k == 0 || n < k) throw ValidationError("k-means++ needs 1 <= k <= rows");
  Rng rng(seed);
  Eigen::MatrixXd centers(static_cast<Index>(k), data.cols());
  centers.row(0) = data.row(static_cast<Index>(rng.below(n)));
  Eigen::VectorXd nearest(data.rows());
  for (Index r = 0; r < data.rows(); ++r) {
    nearest(r) = (data.row(r) - centers.row(0)).squaredNorm();
  }
  for (std::size_t c = 1; c < k; ++c) {
    const double total = nearest.sum();
    Index pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = data.rows() - 1;
      for (Index r = 0; r < data.rows(); ++r) {
        acc += nearest(r);
        if (acc > target && nearest(r) > 0.0) {
          pick = r;
          break;
        }
      }
    } else {
      pick = static_cast<Index>(rng.below(n));
    }
    centers.row(static_cast<Index>(c)) = data.row(pick);
    for (Index r = 0; r < data.rows(); ++r) {
      nearest(r) = std::min(nearest(r), (data.row(r) - centers.row(static_cast<Index>(c))).squaredNorm());
    }
  }
  return centers;
}

FitResult fit_gmm(const Eigen::MatrixXd& data, const FitConfig& cfg) {
  const Index n = data.rows();
  const Index d = data.cols();
  const auto k = static_cast<Index>(cfg.components);
  if (k < 1) throw ValidationError("component count must be at least 1");
  if (n < k) {
    throw ValidationError("need at least " + std::to_string(k) + " samples, got " +
                          std::to_string(n));
  }
  if (d < 1) throw ValidationError("data dimension must be positive");
  if (!(cfg.rel_tol > 0.0)) throw ValidationError("rel_tol must be positive");
  if (!(cfg.variance_floor > 0.0)) throw ValidationError("variance_floor must be positive");
  if (!data.allFinite()) throw ValidationError("training data contains non-finite values");

  const Eigen::RowVectorXd data_var = column_variance(data);
  const double mean_var = data_var.mean();
  if (!(data_var.maxCoeff() > 0.0)) {
    throw ValidationError("training data has zero variance in every dimension");
  }
  Eigen::RowVectorXd floor = cfg.variance_floor * data_var;
  for (Index j = 0; j < d; ++j) {
    if (!(floor(j) > 0.0)) floor(j) = cfg.variance_floor * mean_var;
  }

  // Initialization: k-means++ seeding followed by a few Lloyd passes.
  Eigen::MatrixXd centers = kmeans_plus_plus(data, cfg.components, cfg.seed);
  Eigen::VectorXi labels = assign_nearest(data, centers);
  for (std::size_t it = 0; it < kLloydIters; ++it) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Index r = 0; r < n; ++r) {
      sums.row(labels(r)) += data.row(r);
      counts(labels(r)) += 1.0;
    }
    for (Index c = 0; c < k; ++c) {
      if (counts(c) > 0.0) centers.row(c) = sums.row(c) / counts(c);
    }
    Eigen::VectorXi next = assign_nearest(data, centers);
    if (next == labels) break;
    labels = std::move(next);
  }

  GaussianMixture model;
  model.weights = Eigen::VectorXd::Zero(k);
  model.means = centers;
  model.variances = Eigen::MatrixXd::Zero(k, d);
  {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Index r = 0; r < n; ++r) {
      counts(labels(r)) += 1.0;
      model.variances.row(labels(r)) += (data.row(r) - centers.row(labels(r))).array().square().matrix();
    }
    for (Index c = 0; c < k; ++c) {
      if (counts(c) >= 2.0) {
        model.variances.row(c) = (model.variances.row(c) / counts(c)).cwiseMax(floor);
      } else {
        model.variances.row(c) = data_var.cwiseMax(floor);
      }
      model.weights(c) = std::max(counts(c), 1.0);
    }
    model.weights /= model.weights.sum();
  }

  FitResult result;
  Eigen::MatrixXd gamma(n, k);
  Eigen::VectorXd row_ll(n);
  const unsigned threads = resolve_threads(cfg.threads);

  const auto e_step = [&]() {
    const Precomputed pre(model);
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t r) {
      const auto row = static_cast<Index>(r);
      Eigen::RowVectorXd logs(k);
      pre.log_densities(model, data.row(row), logs);
      const double total = log_sum_exp(logs.transpose());
      row_ll(row) = total;
      gamma.row(row) = (logs.array() - total).exp();
    });
    double sum = 0.0;
    for (Index r = 0; r < n; ++r) sum += row_ll(r);
    return sum / static_cast<double>(n);
  };

  const auto m_step = [&]() {
    Eigen::VectorXd mass(k);
    parallel_for(static_cast<std::size_t>(k), threads, [&](std::size_t c) {
      const auto comp = static_cast<Index>(c);
      double nk = 0.0;
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(d);
      for (Index r = 0; r < n; ++r) {
        nk += gamma(r, comp);
        mean += gamma(r, comp) * data.row(r);
      }
      mass(comp) = nk;
      if (nk / static_cast<double>(n) < kRescueWeight) return;
      mean /= nk;
      Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(d);
      for (Index r = 0; r < n; ++r) {
        var += gamma(r, comp) * (data.row(r) - mean).array().square().matrix();
      }
      model.means.row(comp) = mean;
      model.variances.row(comp) = (var / nk).cwiseMax(floor);
    });

    // Re-seed starved components at the least likely training points.
    std::vector<Index> by_likelihood;
    for (Index c = 0; c < k; ++c) {
      if (mass(c) / static_cast<double>(n) >= kRescueWeight) continue;
      if (by_likelihood.empty()) {
        by_likelihood.resize(static_cast<std::size_t>(n));
        for (Index r = 0; r < n; ++r) by_likelihood[static_cast<std::size_t>(r)] = r;
        std::stable_sort(by_likelihood.begin(), by_likelihood.end(),
                         [&](Index a, Index b) { return row_ll(a) < row_ll(b); });
      }
      const Index point = by_likelihood[result.rescued_components % by_likelihood.size()];
      model.means.row(c) = data.row(point);
      model.variances.row(c) = data_var.cwiseMax(floor);
      mass(c) = 1.0;
      ++result.rescued_components;
    }
    model.weights = mass / mass.sum();
  };

  double ll = e_step();
  result.log_likelihood.push_back(ll);
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    m_step();
    ++result.iterations;
    const double next = e_step();
    result.log_likelihood.push_back(next);
    if (std::abs(next - ll) <= cfg.rel_tol * std::abs(ll)) {
      result.converged = true;
      break;
    }
    ll = next;
  }
  model.weights /= model.weights.sum();
  result.model = std::move(model);
  return result;
}

}  // namespace novelty::gmm
