#include "novelty/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "novelty/error.hpp"
#include "novelty/gmm.hpp"

namespace novelty::stats {
namespace {

const std::vector<std::string> kNoveltyColumns{"tagnov", "comp_fvgmm", "incep_fvgmm",
                                               "comp_fvmrf", "incep_fvmrf"};

const std::vector<std::string> kAnalysisColumns{
    "shot_id",     "user_id",        "timestamp",    "log_likes", "log_views",  "tagnov",
    "incep_fvgmm", "comp_fvgmm",     "incep_fvmrf",  "comp_fvmrf", "log_days_active",
    "n_prev_shots", "in_deg",        "out_deg",      "closeness", "constraint", "density"};

std::optional<double> novelty_value(const pipeline::ShotScores& s, const std::string& column) {
  if (column == "tagnov") return s.tag.normalized;
  if (column == "comp_fvgmm" && s.comp) return s.comp->fvgmm_raw;
  if (column == "incep_fvgmm" && s.embed) return s.embed->fvgmm_raw;
  if (column == "comp_fvmrf" && s.comp) return s.comp->fvmrf;
  if (column == "incep_fvmrf" && s.embed) return s.embed->fvmrf;
  return std::nullopt;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string cell(double v) {
  if (!std::isfinite(v)) return "NA";
  return pipeline::format_double(v);
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("pearson inputs differ in length");
  if (x.size() < 2) throw ValidationError("pearson needs at least two observations");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw ValidationError("pearson correlation undefined for zero-variance input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

MannWhitney mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("Mann-Whitney U needs two non-empty samples");
  const std::size_t n1 = a.size();
  const std::size_t n2 = b.size();
  const std::size_t n = n1 + n2;

  std::vector<std::pair<double, std::size_t>> pooled;
  pooled.reserve(n);
  for (std::size_t i = 0; i < n1; ++i) pooled.emplace_back(a[i], i);
  for (std::size_t i = 0; i < n2; ++i) pooled.emplace_back(b[i], n1 + i);
  for (const auto& [v, idx] : pooled) {
    if (std::isnan(v)) throw ValidationError("Mann-Whitney U input contains NaN");
  }
  std::sort(pooled.begin(), pooled.end());

  // Doubled midranks stay integral: positions i..j-1 (1-based i+1..j) get i + j + 1.
  std::vector<std::int64_t> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && pooled[j].first == pooled[i].first) ++j;
    const auto r2 = static_cast<std::int64_t>(i + j + 1);
    for (std::size_t k = i; k < j; ++k) rank2[pooled[k].second] = r2;
    const auto t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }

  std::int64_t sum2 = 0;
  for (std::size_t i = 0; i < n1; ++i) sum2 += rank2[i];
  const auto dn1 = static_cast<double>(n1);
  const auto dn2 = static_cast<double>(n2);
  MannWhitney out;
  out.u = static_cast<double>(sum2) / 2.0 - dn1 * (dn1 + 1.0) / 2.0;

  if (n <= kExactLimit) {
    out.exact = true;
    const std::int64_t max_sum = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n + 1);
    // ways[k][s]: subsets of size k with doubled rank sum s.
    std::vector<std::vector<double>> ways(n1 + 1, std::vector<double>(max_sum + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t item = 0; item < n; ++item) {
      const std::int64_t r = rank2[item];
      for (std::size_t k = std::min(item + 1, n1); k >= 1; --k) {
        for (std::int64_t s = max_sum; s >= r; --s) ways[k][s] += ways[k - 1][s - r];
      }
    }
    const std::int64_t center2 = static_cast<std::int64_t>(n1) * static_cast<std::int64_t>(n + 1);
    const std::int64_t observed = std::llabs(sum2 - center2);
    double extreme = 0.0;
    double total = 0.0;
    for (std::int64_t s = 0; s <= max_sum; ++s) {
      total += ways[n1][s];
      if (std::llabs(s - center2) >= observed) extreme += ways[n1][s];
    }
    out.p = std::min(1.0, extreme / total);
    return out;
  }

  const auto dn = static_cast<double>(n);
  const double mu = dn1 * dn2 / 2.0;
  const double var = dn1 * dn2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (!(var > 0.0)) {
    out.p = 1.0;
    return out;
  }
  const double z = std::max(0.0, std::abs(out.u - mu) - 0.5) / std::sqrt(var);
  out.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return out;
}

std::vector<std::string> emerging_tags(std::span<const store::ShotRecord> shots,
                                       Timestamp cutoff, std::size_t top_k) {
  std::map<std::string, std::pair<std::size_t, Timestamp>> usage;
  for (const auto& s : shots) {
    for (const auto& t : s.tags) {
      auto [it, inserted] = usage.try_emplace(t, 0, s.timestamp);
      ++it->second.first;
      it->second.second = std::min(it->second.second, s.timestamp);
    }
  }
  std::vector<std::pair<std::string, std::pair<std::size_t, Timestamp>>> ranked(usage.begin(),
                                                                                usage.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
    return x.second.first > y.second.first;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && i < top_k; ++i) {
    if (ranked[i].second.second > cutoff) out.push_back(ranked[i].first);
  }
  return out;
}

const std::vector<std::string>& novelty_columns() { return kNoveltyColumns; }

EarlyLateReport early_late_test(std::span<const pipeline::ShotScores> scores,
                                std::span<const store::ShotRecord> shots,
                                const std::string& tag, double frac) {
  if (!(frac > 0.0 && frac <= 0.5)) throw ValidationError("frac must lie in (0, 0.5]");
  std::vector<const store::ShotRecord*> tagged;
  for (const auto& s : shots) {
    if (std::find(s.tags.begin(), s.tags.end(), tag) != s.tags.end()) tagged.push_back(&s);
  }
  if (tagged.size() < 20) {
    throw ValidationError("tag '" + tag + "' appears on " + std::to_string(tagged.size()) +
                          " images; at least 20 are required");
  }
  const auto group = static_cast<std::size_t>(std::floor(frac * static_cast<double>(tagged.size())));
  if (group < 1) throw ValidationError("frac yields an empty comparison group");

  std::unordered_map<std::string_view, const pipeline::ShotScores*> by_id;
  for (const auto& s : scores) by_id.emplace(s.shot_id, &s);

  EarlyLateReport report{tag, tagged.size(), group, {}};
  for (const auto& column : kNoveltyColumns) {
    std::vector<double> early;
    std::vector<double> late;
    const auto collect = [&](std::size_t begin, std::size_t end, std::vector<double>& into) {
      for (std::size_t i = begin; i < end; ++i) {
        const auto it = by_id.find(tagged[i]->shot_id);
        if (it == by_id.end()) continue;
        if (const auto v = novelty_value(*it->second, column)) into.push_back(*v);
      }
    };
    collect(0, group, early);
    collect(tagged.size() - group, tagged.size(), late);
    ColumnTest ct{column, early.size(), late.size(), mean_of(early), mean_of(late), std::nullopt};
    if (!early.empty() && !late.empty()) ct.test = mann_whitney_u(early, late);
    report.columns.push_back(std::move(ct));
  }
  return report;
}

void write_report(const EarlyLateReport& report, std::ostream& out) {
  out << "tag,tagged,group_size,column,early_n,late_n,early_mean,late_mean,U,p,exact\n";
  for (const auto& c : report.columns) {
    out << report.tag << ',' << report.tagged << ',' << report.group_size << ',' << c.column
        << ',' << c.early_n << ',' << c.late_n << ',' << cell(c.early_mean) << ','
        << cell(c.late_mean) << ',';
    if (c.test) {
      out << cell(c.test->u) << ',' << cell(c.test->p) << ',' << (c.test->exact ? 1 : 0);
    } else {
      out << "NA,NA,NA";
    }
    out << '\n';
  }
}

Pca2d pca2d(const Eigen::MatrixXd& data) {
  if (data.rows() < 3) throw ValidationError("pca needs at least three rows");
  if (data.cols() < 1) throw ValidationError("pca needs at least one column");
  Pca2d out;
  out.coords = Eigen::MatrixXd::Zero(data.rows(), 2);
  out.explained_share = Eigen::Vector2d::Zero();

  const gmm::Projection p = gmm::fit_projection(data, 2);
  const Eigen::MatrixXd projected = p.apply_rows(data);
  const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
  const double total = centered.squaredNorm() / static_cast<double>(data.rows() - 1);

  const double top = p.explained_variance.size() > 0 ? p.explained_variance(0) : 0.0;
  const double tol = 1e-12 * std::max(top, 1e-300);
  std::size_t rank = 0;
  for (Eigen::Index c = 0; c < p.explained_variance.size(); ++c) {
    if (p.explained_variance(c) > tol && total > 0.0) ++rank;
  }
  for (std::size_t c = 0; c < std::min<std::size_t>(rank, 2); ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    out.coords.col(col) = projected.col(col);
    out.explained_share(col) = p.explained_variance(col) / total;
  }
  if (rank < 2) {
    out.warnings.push_back("data rank " + std::to_string(rank) +
                           " < 2; missing coordinates set to zero");
  }
  return out;
}

std::vector<NamedColumn> numeric_columns(std::span<const pipeline::ShotScores> scores) {
  const bool comp = !scores.empty() && std::all_of(scores.begin(), scores.end(),
                                                   [](const auto& s) { return s.comp.has_value(); });
  const bool embed = !scores.empty() && std::all_of(scores.begin(), scores.end(),
                                                    [](const auto& s) { return s.embed.has_value(); });
  std::vector<NamedColumn> cols;
  const auto add = [&](std::string name, auto getter) {
    NamedColumn c{std::move(name), {}};
    c.values.reserve(scores.size());
    for (const auto& s : scores) c.values.push_back(getter(s));
    cols.push_back(std::move(c));
  };
  add("tagnov", [](const pipeline::ShotScores& s) { return s.tag.normalized; });
  if (embed) {
    add("incep_fvgmm", [](const pipeline::ShotScores& s) { return s.embed->fvgmm_raw; });
    add("incep_fvmrf", [](const pipeline::ShotScores& s) { return s.embed->fvmrf; });
    add("incep_aic", [](const pipeline::ShotScores& s) { return s.embed->aic; });
  }
  if (comp) {
    add("comp_fvgmm", [](const pipeline::ShotScores& s) { return s.comp->fvgmm_raw; });
    add("comp_fvmrf", [](const pipeline::ShotScores& s) { return s.comp->fvmrf; });
    add("comp_aic", [](const pipeline::ShotScores& s) { return s.comp->aic; });
  }
  add("log_likes", [](const pipeline::ShotScores& s) { return std::log1p(static_cast<double>(s.likes)); });
  add("log_views", [](const pipeline::ShotScores& s) { return std::log1p(static_cast<double>(s.views)); });
  add("in_deg", [](const pipeline::ShotScores& s) { return static_cast<double>(s.network.in_degree); });
  add("out_deg", [](const pipeline::ShotScores& s) { return static_cast<double>(s.network.out_degree); });
  add("closeness", [](const pipeline::ShotScores& s) { return s.network.closeness; });
  add("constraint", [](const pipeline::ShotScores& s) { return s.network.constraint; });
  add("density", [](const pipeline::ShotScores& s) { return s.network.density; });
  return cols;
}

Eigen::MatrixXd correlation_matrix(std::span<const NamedColumn> columns) {
  const auto k = static_cast<Eigen::Index>(columns.size());
  Eigen::MatrixXd corr(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i; j < k; ++j) {
      double r;
      try {
        r = pearson(columns[static_cast<std::size_t>(i)].values,
                    columns[static_cast<std::size_t>(j)].values);
      } catch (const ValidationError&) {
        r = std::numeric_limits<double>::quiet_NaN();
      }
      corr(i, j) = r;
      corr(j, i) = r;
    }
  }
  return corr;
}

void write_correlation_csv(std::span<const NamedColumn> columns, const Eigen::MatrixXd& corr,
                           std::ostream& out) {
  out << "pearson";
  for (const auto& c : columns) out << ',' << c.name;
  out << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out << columns[i].name;
    for (std::size_t j = 0; j < columns.size(); ++j) {
      out << ',' << cell(corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out << '\n';
  }
}

const std::vector<std::string>& analysis_columns() { return kAnalysisColumns; }

void export_analysis_table(std::span<const pipeline::ShotScores> scores, std::ostream& out) {
  for (std::size_t i = 0; i < kAnalysisColumns.size(); ++i) {
    out << (i ? "," : "") << kAnalysisColumns[i];
  }
  out << '\n';
  const auto opt = [](const std::optional<pipeline::KindScores>& k, double pipeline::KindScores::*field) {
    return k ? pipeline::format_double((*k).*field) : std::string();
  };
  for (const auto& s : scores) {
    out << s.shot_id << ',' << s.user_id << ',' << format_timestamp(s.timestamp) << ','
        << pipeline::format_double(std::log1p(static_cast<double>(s.likes))) << ','
        << pipeline::format_double(std::log1p(static_cast<double>(s.views))) << ','
        << pipeline::format_double(s.tag.normalized) << ','
        << opt(s.embed, &pipeline::KindScores::fvgmm_raw) << ','
        << opt(s.comp, &pipeline::KindScores::fvgmm_raw) << ','
        << opt(s.embed, &pipeline::KindScores::fvmrf) << ','
        << opt(s.comp, &pipeline::KindScores::fvmrf) << ','
        << pipeline::format_double(std::log1p(s.days_active)) << ',' << s.n_prev_shots << ','
        << s.network.in_degree << ',' << s.network.out_degree << ','
        << pipeline::format_double(s.network.closeness) << ','
        << pipeline::format_double(s.network.constraint) << ','
        << pipeline::format_double(s.network.density) << '\n';
  }
}

void export_analysis_table(std::span<const pipeline::ShotScores> scores,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  export_analysis_table(scores, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace novelty::stats
