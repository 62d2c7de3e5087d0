#include "novelty/model.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "novelty/error.hpp"
#include "novelty/parallel.hpp"

namespace novelty::model {
namespace {

constexpr std::string_view kMagic = "novelty-gmm";
constexpr int kVersion = 1;

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

double get_f64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
    throw ValidationError("model file truncated");
  }
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

// Row-major order regardless of Eigen's storage order.
void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(out, m(r, c));
  }
}

Eigen::MatrixXd get_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get_f64(in);
  }
  return m;
}

void put_vector(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(out, v(i));
}

Eigen::VectorXd get_vector(std::istream& in, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = get_f64(in);
  return v;
}

}  // namespace

Method parse_method(std::string_view name) {
  if (name == "fvgmm") return Method::fvgmm;
  if (name == "fvmrf") return Method::fvmrf;
  if (name == "aic") return Method::aic;
  throw ValidationError("unknown scoring method '" + std::string(name) + "'");
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::fvgmm: return "fvgmm";
    case Method::fvmrf: return "fvmrf";
    case Method::aic: return "aic";
  }
  return "?";
}

Eigen::VectorXd NoveltyModel::prepare(const Eigen::Ref<const Eigen::VectorXd>& raw) const {
  if (projection) return projection->apply(raw);
  if (static_cast<std::size_t>(raw.size()) != mixture.dim()) {
    throw DimensionMismatch(mixture.dim(), static_cast<std::size_t>(raw.size()));
  }
  return raw;
}

fisher::NoveltyScore NoveltyModel::score(const Eigen::Ref<const Eigen::VectorXd>& raw,
                                         Method method) const {
  const Eigen::VectorXd x = prepare(raw);
  switch (method) {
    case Method::fvgmm:
      return fisher::fvgmm_novelty(mixture, x, fvgmm_range);
    case Method::fvmrf: {
      const double s = fisher::fvmrf_novelty(mrf, x).score;
      return {s, fvmrf_range.scale(s)};
    }
    case Method::aic: {
      const double a = gmm::aic_per_image(mixture, x);
      return {a, aic_range.scale(a)};
    }
  }
  throw ValidationError("unknown scoring method");
}

NoveltyModel build_model(const Eigen::MatrixXd& training_rows, const gmm::FitConfig& cfg,
                         BuildReport* report) {
  NoveltyModel m;
  Eigen::MatrixXd data;
  if (cfg.pca_dim && *cfg.pca_dim < static_cast<std::size_t>(training_rows.cols())) {
    m.projection = gmm::fit_projection(training_rows, *cfg.pca_dim);
    data = m.projection->apply_rows(training_rows);
  } else {
    data = training_rows;
  }

  gmm::FitResult fit = gmm::fit_gmm(data, cfg);
  m.mixture = std::move(fit.model);
  m.mrf = fisher::estimate_mrf_reference(m.mixture, data);

  const auto rows = static_cast<std::size_t>(data.rows());
  std::vector<double> fv(rows);
  std::vector<double> mrf(rows);
  std::vector<double> aic(rows);
  parallel_for(rows, resolve_threads(cfg.threads), [&](std::size_t r) {
    const Eigen::VectorXd x = data.row(static_cast<Eigen::Index>(r)).transpose();
    fv[r] = fisher::fisher_vector(m.mixture, x).values.norm();
    mrf[r] = fisher::fvmrf_novelty(m.mrf, x).score;
    aic[r] = gmm::aic_per_image(m.mixture, x);
  });
  m.fvgmm_range = fisher::NormStats::from(fv);
  m.fvmrf_range = fisher::NormStats::from(mrf);
  m.aic_range = fisher::NormStats::from(aic);

  if (report) {
    report->log_likelihood = std::move(fit.log_likelihood);
    report->iterations = fit.iterations;
    report->converged = fit.converged;
    report->rescued_components = fit.rescued_components;
  }
  return m;
}

void save_model(const NoveltyModel& m, std::ostream& out) {
  m.mixture.validate();
  const auto n = m.mixture.components();
  const auto d = m.mixture.dim();
  out << kMagic << ' ' << kVersion << '\n';
  out << "components " << n << '\n';
  out << "dim " << d << '\n';
  out << "input_dim " << m.input_dim() << '\n';
  out << "projection " << (m.projection ? 1 : 0) << '\n';
  out << "end\n";
  put_vector(out, m.mixture.weights);
  put_matrix(out, m.mixture.means);
  put_matrix(out, m.mixture.variances);
  if (m.projection) {
    put_vector(out, m.projection->mean);
    put_matrix(out, m.projection->basis);
    put_vector(out, m.projection->explained_variance);
  }
  put_vector(out, m.mrf.mean_distance);
  put_vector(out, m.mrf.stddev_distance);
  for (const auto& range : {m.fvgmm_range, m.fvmrf_range, m.aic_range}) {
    put_f64(out, range.min);
    put_f64(out, range.max);
  }
  if (!out) throw IoError("failed writing model");
}

void save_model(const NoveltyModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  save_model(m, out);
}

NoveltyModel load_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty model file");
  {
    std::istringstream head(line);
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != kMagic) throw ValidationError("not a novelty model file");
    if (version != kVersion) {
      throw ValidationError("unsupported model version " + std::to_string(version));
    }
  }
  std::map<std::string, std::size_t> header;
  for (;;) {
    if (!std::getline(in, line)) throw ValidationError("model header not terminated");
    if (line == "end") break;
    std::istringstream kv(line);
    std::string key;
    std::size_t value = 0;
    if (!(kv >> key >> value)) throw ValidationError("malformed model header line '" + line + "'");
    header[key] = value;
  }
  const auto field = [&](const char* key) {
    const auto it = header.find(key);
    if (it == header.end()) throw ValidationError(std::string("model header missing ") + key);
    return static_cast<Eigen::Index>(it->second);
  };
  const Eigen::Index n = field("components");
  const Eigen::Index d = field("dim");
  const Eigen::Index input_dim = field("input_dim");
  const bool has_projection = field("projection") != 0;
  if (n < 1 || d < 1) throw ValidationError("model header has empty shapes");
  if (!has_projection && input_dim != d) throw ValidationError("model input_dim disagrees with dim");

  NoveltyModel m;
  m.mixture.weights = get_vector(in, n);
  m.mixture.means = get_matrix(in, n, d);
  m.mixture.variances = get_matrix(in, n, d);
  if (has_projection) {
    gmm::Projection p;
    p.mean = get_vector(in, input_dim);
    p.basis = get_matrix(in, input_dim, d);
    p.explained_variance = get_vector(in, d);
    m.projection = std::move(p);
  }
  m.mrf.means = m.mixture.means;
  m.mrf.mean_distance = get_vector(in, n);
  m.mrf.stddev_distance = get_vector(in, n);
  for (auto* range : {&m.fvgmm_range, &m.fvmrf_range, &m.aic_range}) {
    range->min = get_f64(in);
    range->max = get_f64(in);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ValidationError("trailing bytes after model payload");
  }
  m.mixture.validate();
  return m;
}

NoveltyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model '" + path.string() + "'");
  return load_model(in);
}

}  // namespace novelty::model
