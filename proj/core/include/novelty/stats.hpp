#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "novelty/feature_store.hpp"
#include "novelty/pipeline.hpp"
#include "novelty/time.hpp"

namespace novelty::stats {

/// Sample Pearson correlation. Throws ValidationError for mismatched or
/// too-short inputs and for zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

struct MannWhitney {
  double u = 0.0;  // for the first sample
  double p = 1.0;  // two-sided
  bool exact = false;
};

/// Rank-sum test with midranks for ties. Exact permutation distribution
/// when the pooled size is at most kExactLimit, otherwise the normal
/// approximation with tie and continuity corrections.
MannWhitney mann_whitney_u(std::span<const double> a, std::span<const double> b);

inline constexpr std::size_t kExactLimit = 20;

/// Tags first used strictly after cutoff whose total use count ranks within
/// the top_k of all tags (ties at the boundary resolved by tag name).
std::vector<std::string> emerging_tags(std::span<const store::ShotRecord> shots,
                                       Timestamp cutoff, std::size_t top_k);

struct ColumnTest {
  std::string column;
  std::size_t early_n = 0;
  std::size_t late_n = 0;
  double early_mean = 0.0;
  double late_mean = 0.0;
  std::optional<MannWhitney> test;  // unset when a group has no scored shots
};

struct EarlyLateReport {
  std::string tag;
  std::size_t tagged = 0;
  std::size_t group_size = 0;
  std::vector<ColumnTest> columns;
};

/// Novelty columns compared by early_late_test.
const std::vector<std::string>& novelty_columns();

/// Splits the images carrying tag (in time order) into the earliest and
/// latest floor(frac * n) and compares each novelty column between them.
EarlyLateReport early_late_test(std::span<const pipeline::ShotScores> scores,
                                std::span<const store::ShotRecord> shots,
                                const std::string& tag, double frac = 0.10);

void write_report(const EarlyLateReport& report, std::ostream& out);

struct Pca2d {
  Eigen::MatrixXd coords;          // n x 2
  Eigen::Vector2d explained_share; // fraction of total variance per axis
  std::vector<std::string> warnings;
};

/// Centered projection onto the two leading principal directions.
Pca2d pca2d(const Eigen::MatrixXd& data);

/// Numeric score columns used for correlation matrices.
struct NamedColumn {
  std::string name;
  std::vector<double> values;
};
std::vector<NamedColumn> numeric_columns(std::span<const pipeline::ShotScores> scores);

/// Pairwise Pearson matrix; entries are NaN where a column has zero
/// variance.
Eigen::MatrixXd correlation_matrix(std::span<const NamedColumn> columns);

void write_correlation_csv(std::span<const NamedColumn> columns, const Eigen::MatrixXd& corr,
                           std::ostream& out);

/// Analysis-ready columns; log_x means ln(1 + x).
const std::vector<std::string>& analysis_columns();
void export_analysis_table(std::span<const pipeline::ShotScores> scores, std::ostream& out);
void export_analysis_table(std::span<const pipeline::ShotScores> scores,
                           const std::filesystem::path& path);

}  // namespace novelty::stats
