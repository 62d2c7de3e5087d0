#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>

#include <Eigen/Core>

#include "novelty/fisher.hpp"
#include "novelty/gmm.hpp"

namespace novelty::model {

enum class Method { fvgmm, fvmrf, aic };

Method parse_method(std::string_view name);
std::string_view method_name(Method m);

/// A fitted mixture together with everything needed to score new points
/// against the window it was trained on: the optional projection applied
/// to raw features, the distance statistics for FVMRF and the observed
/// range of each score for min-max scaling.
struct NoveltyModel {
  std::optional<gmm::Projection> projection;
  gmm::GaussianMixture mixture;
  fisher::MrfReference mrf;
  fisher::NormStats fvgmm_range;
  fisher::NormStats fvmrf_range;
  fisher::NormStats aic_range;

  std::size_t input_dim() const {
    return projection ? projection->input_dim() : mixture.dim();
  }

  // Raw feature vector -> model space.
  Eigen::VectorXd prepare(const Eigen::Ref<const Eigen::VectorXd>& raw) const;

  fisher::NoveltyScore score(const Eigen::Ref<const Eigen::VectorXd>& raw,
                             Method method) const;
};

struct BuildReport {
  std::vector<double> log_likelihood;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t rescued_components = 0;
};

/// Fits on raw training rows (projecting first when cfg.pca_dim is set and
/// smaller than the input dimension) and estimates the scoring references
/// on the same rows.
NoveltyModel build_model(const Eigen::MatrixXd& training_rows, const gmm::FitConfig& cfg,
                         BuildReport* report = nullptr);

/// Versioned text header followed by little-endian float64 blocks.
void save_model(const NoveltyModel& m, std::ostream& out);
void save_model(const NoveltyModel& m, const std::filesystem::path& path);
NoveltyModel load_model(std::istream& in);
NoveltyModel load_model(const std::filesystem::path& path);

}  // namespace novelty::model
