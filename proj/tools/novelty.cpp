// novelty: command line front end for the scoring library.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "novelty/error.hpp"
#include "novelty/feature_store.hpp"
#include "novelty/imgfeat.hpp"
#include "novelty/model.hpp"
#include "novelty/parallel.hpp"
#include "novelty/pipeline.hpp"
#include "novelty/stats.hpp"
#include "novelty/tagnov.hpp"

namespace fs = std::filesystem;
using namespace novelty;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string config;
  std::string log_level = "info";
};

// Defaults, then the config file, then explicit flags.
pipeline::PipelineConfig effective_config(const Globals& g) {
  pipeline::PipelineConfig cfg;
  if (!g.config.empty()) cfg = pipeline::load_config(g.config);
  if (g.seed) cfg.fit.seed = *g.seed;
  if (g.threads) cfg.fit.threads = *g.threads;
  return cfg;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void log_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) spdlog::warn("{}", w);
}

// extract-compositional ---------------------------------------------------------

struct ExtractArgs {
  std::string shots;
  std::string images;
  std::string out;
};

int extract_compositional(const Globals& g, const ExtractArgs& a) {
  const auto cfg = effective_config(g);
  const auto shots = store::load_shots(a.shots);
  const unsigned threads = resolve_threads(cfg.fit.threads);

  std::vector<std::optional<img::CompositionalFeatures>> rows(shots.size());
  std::vector<std::string> errors(shots.size());
  parallel_for(shots.size(), threads, [&](std::size_t i) {
    const auto& s = shots[i];
    if (s.media_ref.empty()) {
      errors[i] = "no media_ref";
      return;
    }
    try {
      rows[i] = img::extract_compositional(img::decode_image(fs::path(a.images) / s.media_ref));
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  std::vector<std::string> ids;
  std::vector<float> data;
  std::ofstream err_log;
  fs::create_directories(a.out);
  const fs::path err_path = fs::path(a.out) / "errors.txt";
  err_log = open_out(err_path);
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < shots.size(); ++i) {
    if (!rows[i]) {
      ++skipped;
      err_log << shots[i].shot_id << '\t' << errors[i] << '\n';
      spdlog::warn("skipped shot={} reason=\"{}\"", shots[i].shot_id, errors[i]);
      continue;
    }
    ids.push_back(shots[i].shot_id);
    for (double v : *rows[i]) data.push_back(static_cast<float>(v));
  }
  finish(err_log, err_path);
  const store::FeaturePack pack(std::move(ids), img::kCompositionalDim, std::move(data),
                                "compositional");
  store::write_pack(pack, a.out);
  spdlog::info("extract-compositional rows={} skipped={} out={}", pack.rows(), skipped, a.out);
  return 0;
}

// ingest-embeddings ------------------------------------------------------------

struct IngestArgs {
  std::string in;
  std::string out;
  std::size_t dim = 2048;
  std::string shots;
};

int ingest_embeddings(const IngestArgs& a) {
  const auto pack = store::read_pack(a.in);
  if (a.dim != 0 && pack.dim() != a.dim) {
    throw ValidationError("embedding pack has dim " + std::to_string(pack.dim()) + ", expected " +
                          std::to_string(a.dim));
  }
  if (!a.shots.empty()) {
    std::size_t missing = 0;
    for (const auto& s : store::load_shots(a.shots)) {
      if (!pack.index_of(s.shot_id)) ++missing;
    }
    if (missing) spdlog::warn("{} shots have no embedding row", missing);
  }
  if (fs::weakly_canonical(a.in) != fs::weakly_canonical(a.out)) {
    fs::create_directories(a.out);
    for (const char* name : {"meta", "ids.txt", "data.f32le"}) {
      fs::copy_file(fs::path(a.in) / name, fs::path(a.out) / name,
                    fs::copy_options::overwrite_existing);
    }
  }
  spdlog::info("ingest-embeddings rows={} dim={} out={}", pack.rows(), pack.dim(), a.out);
  return 0;
}

// fit / score -------------------------------------------------------------------

struct FitArgs {
  std::string pack;
  std::string out;
  std::optional<std::size_t> components;
  std::optional<std::size_t> pca;
};

int fit(const Globals& g, const FitArgs& a) {
  const auto cfg = effective_config(g);
  const auto pack = store::read_pack(a.pack);
  gmm::FitConfig fc = cfg.fit;
  if (a.components) fc.components = *a.components;
  if (a.pca) {
    if (*a.pca > 0) fc.pca_dim = *a.pca;
  } else if (pack.kind() == "embedding") {
    fc.pca_dim = cfg.embed_pca_dim;
  }
  fc.threads = resolve_threads(fc.threads);
  model::BuildReport report;
  const auto m = model::build_model(pack.to_matrix(), fc, &report);
  model::save_model(m, fs::path(a.out));
  spdlog::info("fit components={} dim={} iterations={} converged={} rescued={} ll={}",
               m.mixture.components(), m.mixture.dim(), report.iterations, report.converged,
               report.rescued_components,
               report.log_likelihood.empty() ? 0.0 : report.log_likelihood.back());
  return 0;
}

struct ScoreArgs {
  std::string model;
  std::string pack;
  std::string method = "fvgmm";
  std::string out;
};

int score(const Globals& g, const ScoreArgs& a) {
  const auto cfg = effective_config(g);
  const auto m = model::load_model(fs::path(a.model));
  const auto pack = store::read_pack(a.pack);
  const auto method = model::parse_method(a.method);
  if (pack.dim() != m.input_dim()) throw DimensionMismatch(m.input_dim(), pack.dim());
  std::vector<fisher::NoveltyScore> scores(pack.rows());
  parallel_for(pack.rows(), resolve_threads(cfg.fit.threads),
               [&](std::size_t i) { scores[i] = m.score(pack.row_vector(i), method); });
  auto out = open_out(a.out);
  out << "shot_id,raw,scaled\n";
  for (std::size_t i = 0; i < pack.rows(); ++i) {
    out << pack.ids()[i] << ',' << pipeline::format_double(scores[i].raw) << ','
        << pipeline::format_double(scores[i].scaled) << '\n';
  }
  finish(out, a.out);
  spdlog::info("score method={} rows={}", model::method_name(method), pack.rows());
  return 0;
}

// tag-novelty / net-metrics -------------------------------------------------------

int tag_novelty(const std::string& shots_path, const std::string& out_path) {
  const auto shots = store::load_shots(shots_path);
  const auto series = tags::tag_novelty_series(shots);
  auto out = open_out(out_path);
  out << "shot_id,tagnov_raw,tagnov\n";
  for (std::size_t i = 0; i < shots.size(); ++i) {
    out << shots[i].shot_id << ',' << pipeline::format_double(series[i].raw) << ','
        << pipeline::format_double(series[i].normalized) << '\n';
  }
  finish(out, out_path);
  spdlog::info("tag-novelty rows={}", shots.size());
  return 0;
}

int net_metrics(const std::string& follows_path, const std::string& shots_path,
                const std::string& out_path) {
  const auto shots = store::load_shots(shots_path);
  const auto follows = store::load_follows(follows_path);
  const auto series = pipeline::network_series(shots, follows);
  auto out = open_out(out_path);
  out << "shot_id,in_deg,out_deg,closeness,constraint,density\n";
  for (std::size_t i = 0; i < shots.size(); ++i) {
    const auto& f = series[i];
    out << shots[i].shot_id << ',' << f.in_degree << ',' << f.out_degree << ','
        << pipeline::format_double(f.closeness) << ',' << pipeline::format_double(f.constraint)
        << ',' << pipeline::format_double(f.density) << '\n';
  }
  finish(out, out_path);
  spdlog::info("net-metrics rows={} edges={}", shots.size(), follows.size());
  return 0;
}

// run ---------------------------------------------------------------------------

struct RunArgs {
  std::string shots;
  std::string follows;
  std::string pack_comp;
  std::string pack_embed;
  std::string out;
  std::optional<std::size_t> min_user_shots;
};

int run(const Globals& g, const RunArgs& a) {
  auto cfg = effective_config(g);
  if (a.min_user_shots) cfg.min_user_shots = *a.min_user_shots;
  if (a.pack_comp.empty() && a.pack_embed.empty()) {
    throw ValidationError("run needs --pack-comp, --pack-embed or both");
  }
  const auto shots = store::load_shots(a.shots);
  const auto follows =
      a.follows.empty() ? std::vector<store::FollowEdge>{} : store::load_follows(a.follows);
  std::optional<store::FeaturePack> comp;
  std::optional<store::FeaturePack> embed;
  if (!a.pack_comp.empty()) comp = store::read_pack(a.pack_comp);
  if (!a.pack_embed.empty()) embed = store::read_pack(a.pack_embed);

  const auto result = pipeline::run(shots, follows, comp ? &*comp : nullptr,
                                    embed ? &*embed : nullptr, cfg);
  log_warnings(result.warnings);
  for (std::size_t w = 0; w < result.windows.size(); ++w) {
    const auto& r = result.windows[w];
    spdlog::info("window={} train_start={} score_start={} score_end={} training_rows={} scored={}{}",
                 w, format_timestamp(r.window.train_start), format_timestamp(r.window.score_start),
                 format_timestamp(r.window.score_end), r.training_rows, r.scored_rows,
                 r.skipped ? " skipped=1" : "");
  }
  pipeline::write_scores(result.rows, fs::path(a.out));
  spdlog::info("run rows={} windows={} out={}", result.rows.size(), result.windows.size(), a.out);
  return 0;
}

// analysis ------------------------------------------------------------------------

int correlate(const std::string& scores_path, const std::string& out_path) {
  const auto scores = pipeline::read_scores(fs::path(scores_path));
  const auto columns = stats::numeric_columns(scores);
  const auto corr = stats::correlation_matrix(columns);
  auto out = open_out(out_path);
  stats::write_correlation_csv(columns, corr, out);
  finish(out, out_path);
  spdlog::info("correlate estimator=pearson rows={} columns={}", scores.size(), columns.size());
  return 0;
}

struct EmergingArgs {
  std::string scores;
  std::string shots;
  std::string cutoff;
  std::size_t topk = 200;
  double frac = 0.10;
  std::string out;
};

// A bare date names the whole day, so the cutoff is its last second.
Timestamp parse_cutoff(const std::string& text) {
  const Timestamp t = parse_timestamp(text);
  return text.size() == 10 ? t + kSecondsPerDay - 1 : t;
}

int validate_emerging(const EmergingArgs& a) {
  const auto scores = pipeline::read_scores(fs::path(a.scores));
  const auto shots = store::load_shots(a.shots);
  const auto tags = stats::emerging_tags(shots, parse_cutoff(a.cutoff), a.topk);
  spdlog::info("validate-emerging emerging_tags={}", tags.size());

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!a.out.empty()) {
    file = open_out(a.out);
    out = &file;
  }
  bool header = true;
  for (const auto& tag : tags) {
    stats::EarlyLateReport report;
    try {
      report = stats::early_late_test(scores, shots, tag, a.frac);
    } catch (const ValidationError& e) {
      spdlog::warn("tag={} skipped: {}", tag, e.what());
      continue;
    }
    std::ostringstream buf;
    stats::write_report(report, buf);
    std::string text = buf.str();
    if (!header) text = text.substr(text.find('\n') + 1);
    header = false;
    *out << text;
  }
  if (header) {
    stats::write_report({}, *out);
    spdlog::warn("no emerging tag had enough images to test");
  }
  if (!a.out.empty()) finish(file, a.out);
  return 0;
}

int export_table(const std::string& scores_path, const std::string& out_path) {
  const auto scores = pipeline::read_scores(fs::path(scores_path));
  stats::export_analysis_table(scores, fs::path(out_path));
  spdlog::info("export rows={}", scores.size());
  return 0;
}

int pca(const std::string& pack_path, const std::string& out_path) {
  const auto pack = store::read_pack(pack_path);
  const auto result = stats::pca2d(pack.to_matrix());
  log_warnings(result.warnings);
  auto out = open_out(out_path);
  out << "shot_id,pc1,pc2\n";
  for (std::size_t i = 0; i < pack.rows(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << pack.ids()[i] << ',' << pipeline::format_double(result.coords(r, 0)) << ','
        << pipeline::format_double(result.coords(r, 1)) << '\n';
  }
  finish(out, out_path);
  spdlog::info("pca rows={} share1={} share2={}", pack.rows(), result.explained_share(0),
               result.explained_share(1));
  return 0;
}

// synth -------------------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  pipeline::SynthConfig cfg;
  std::string trend_at;
  std::string start;
};

int synth(const Globals& g, SynthArgs a) {
  if (g.seed) a.cfg.seed = *g.seed;
  if (!a.start.empty()) a.cfg.start = parse_timestamp(a.start);
  if (!a.trend_at.empty()) a.cfg.trend_at = parse_timestamp(a.trend_at);
  const auto corpus = pipeline::synth_corpus(a.cfg);
  pipeline::write_corpus(corpus, a.out);
  spdlog::info("synth shots={} follows={} shifted={} out={}", corpus.shots.size(),
               corpus.follows.size(), corpus.shifted_shots.size(), a.out);
  return 0;
}

// CLI11 checks required options before unexpected ones; naming the offending
// token first gives a more useful message.
std::optional<std::string> unknown_argument(CLI::App& app, int argc, char** argv) {
  CLI::App* sub = nullptr;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--") break;
    if (arg.size() > 1 && arg[0] == '-') {
      const std::string name = arg.substr(0, arg.find('='));
      const CLI::Option* opt = sub ? sub->get_option_no_throw(name) : nullptr;
      if (!opt) opt = app.get_option_no_throw(name);
      if (!opt) return "unknown option '" + name + "'" + (sub ? " for " + sub->get_name() : "");
      if (arg.find('=') == std::string::npos && opt->get_type_size() > 0) ++i;
      continue;
    }
    if (!sub) {
      sub = app.get_subcommand_no_throw(arg);
      if (!sub) return "unknown subcommand '" + arg + "'";
    }
  }
  return std::nullopt;
}

void setup_logging(const std::string& level) {
  auto logger = spdlog::stderr_logger_mt("novelty");
  logger->set_pattern("%Y-%m-%dT%H:%M:%S.%e level=%l %v");
  logger->set_level(spdlog::level::from_str(level));
  spdlog::set_default_logger(std::move(logger));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visual and textual novelty scoring for time-ordered image streams"};
  app.name("novelty");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Seed for every randomized step");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
  app.add_option("--config", g.config, "key=value configuration file")->check(CLI::ExistingFile);
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  ExtractArgs extract_args;
  auto* extract = app.add_subcommand("extract-compositional", "47 compositional features per shot image");
  extract->add_option("--shots", extract_args.shots, "Shots file")->required()->check(CLI::ExistingFile);
  extract->add_option("--images", extract_args.images, "Image directory")->required()->check(CLI::ExistingDirectory);
  extract->add_option("--out", extract_args.out, "Output pack directory")->required();

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest-embeddings", "Validate and copy an embedding pack");
  ingest->add_option("--in", ingest_args.in, "Pack produced by the extractor")->required()->check(CLI::ExistingDirectory);
  ingest->add_option("--out", ingest_args.out, "Destination pack directory")->required();
  ingest->add_option("--dim", ingest_args.dim, "Required dimension (0 accepts any)")->capture_default_str();
  ingest->add_option("--shots", ingest_args.shots, "Report shots without a row")->check(CLI::ExistingFile);

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a mixture model to a pack");
  fit_cmd->add_option("--pack", fit_args.pack, "Feature pack")->required()->check(CLI::ExistingDirectory);
  fit_cmd->add_option("--n", fit_args.components, "Mixture components");
  fit_cmd->add_option("--pca", fit_args.pca, "Project to this many dimensions first (0 disables)");
  fit_cmd->add_option("--out", fit_args.out, "Model file")->required();

  ScoreArgs score_args;
  auto* score_cmd = app.add_subcommand("score", "Score a pack against a fitted model");
  score_cmd->add_option("--model", score_args.model, "Model file")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--pack", score_args.pack, "Feature pack")->required()->check(CLI::ExistingDirectory);
  score_cmd->add_option("--method", score_args.method, "fvgmm, fvmrf or aic")
      ->check(CLI::IsMember({"fvgmm", "fvmrf", "aic"}))
      ->capture_default_str();
  score_cmd->add_option("--out", score_args.out, "Output CSV")->required();

  std::string tag_shots;
  std::string tag_out;
  auto* tag_cmd = app.add_subcommand("tag-novelty", "Tag surprise of every shot");
  tag_cmd->add_option("--shots", tag_shots, "Shots file")->required()->check(CLI::ExistingFile);
  tag_cmd->add_option("--out", tag_out, "Output CSV")->required();

  std::string net_follows;
  std::string net_shots;
  std::string net_out;
  auto* net_cmd = app.add_subcommand("net-metrics", "Author network position at each shot");
  net_cmd->add_option("--follows", net_follows, "Follows CSV")->required()->check(CLI::ExistingFile);
  net_cmd->add_option("--shots", net_shots, "Shots file")->required()->check(CLI::ExistingFile);
  net_cmd->add_option("--out", net_out, "Output CSV")->required();

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Rolling-window scoring of a whole corpus");
  run_cmd->add_option("--shots", run_args.shots, "Shots file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--follows", run_args.follows, "Follows CSV")->check(CLI::ExistingFile);
  run_cmd->add_option("--pack-comp", run_args.pack_comp, "Compositional pack")->check(CLI::ExistingDirectory);
  run_cmd->add_option("--pack-embed", run_args.pack_embed, "Embedding pack")->check(CLI::ExistingDirectory);
  run_cmd->add_option("--min-user-shots", run_args.min_user_shots, "Drop authors with fewer shots");
  run_cmd->add_option("--out", run_args.out, "scores.csv path")->required();

  std::string corr_scores;
  std::string corr_out;
  auto* corr_cmd = app.add_subcommand("correlate", "Pearson correlation matrix of score columns");
  corr_cmd->add_option("--scores", corr_scores, "scores.csv")->required()->check(CLI::ExistingFile);
  corr_cmd->add_option("--out", corr_out, "Output CSV")->required();

  EmergingArgs emerging_args;
  auto* emerging_cmd = app.add_subcommand("validate-emerging", "Early/late novelty test on emerging tags");
  emerging_cmd->add_option("--scores", emerging_args.scores, "scores.csv")->required()->check(CLI::ExistingFile);
  emerging_cmd->add_option("--shots", emerging_args.shots, "Shots file")->required()->check(CLI::ExistingFile);
  emerging_cmd->add_option("--cutoff", emerging_args.cutoff, "Tags first used after this instant")->required();
  emerging_cmd->add_option("--topk", emerging_args.topk, "Rank limit on total use")->capture_default_str();
  emerging_cmd->add_option("--frac", emerging_args.frac, "Share of tagged images per group")->capture_default_str();
  emerging_cmd->add_option("--out", emerging_args.out, "Report CSV (stdout when omitted)");

  std::string export_scores;
  std::string export_out;
  auto* export_cmd = app.add_subcommand("export", "Analysis-ready table");
  export_cmd->add_option("--scores", export_scores, "scores.csv")->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--out", export_out, "Output CSV")->required();

  std::string pca_pack;
  std::string pca_out;
  auto* pca_cmd = app.add_subcommand("pca", "Two-dimensional principal projection of a pack");
  pca_cmd->add_option("--pack", pca_pack, "Feature pack")->required()->check(CLI::ExistingDirectory);
  pca_cmd->add_option("--out", pca_out, "Output CSV")->required();

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Seeded synthetic corpus");
  synth_cmd->add_option("--out", synth_args.out, "Output directory")->required();
  synth_cmd->add_option("--shots", synth_args.cfg.n_shots, "Shot count")->capture_default_str();
  synth_cmd->add_option("--users", synth_args.cfg.n_users, "User count")->capture_default_str();
  synth_cmd->add_option("--span-days", synth_args.cfg.span_days, "Corpus span in days")->capture_default_str();
  synth_cmd->add_option("--start", synth_args.start, "First instant (default 2012-01-01)");
  synth_cmd->add_option("--trend-at", synth_args.trend_at, "Plant the shifted trend from this instant");
  synth_cmd->add_option("--planted-tag", synth_args.cfg.planted_tag, "Tag carried by trend shots")->capture_default_str();
  synth_cmd->add_option("--embed-dim", synth_args.cfg.embed_dim, "Embedding dimension")->capture_default_str();

  if (const auto bad = unknown_argument(app, argc, argv)) {
    std::cerr << "error: " << *bad << "\n\n" << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    setup_logging(g.log_level);
    if (*extract) return extract_compositional(g, extract_args);
    if (*ingest) return ingest_embeddings(ingest_args);
    if (*fit_cmd) return fit(g, fit_args);
    if (*score_cmd) return score(g, score_args);
    if (*tag_cmd) return tag_novelty(tag_shots, tag_out);
    if (*net_cmd) return net_metrics(net_follows, net_shots, net_out);
    if (*run_cmd) return run(g, run_args);
    if (*corr_cmd) return correlate(corr_scores, corr_out);
    if (*emerging_cmd) return validate_emerging(emerging_args);
    if (*export_cmd) return export_table(export_scores, export_out);
    if (*pca_cmd) return pca(pca_pack, pca_out);
    if (*synth_cmd) return synth(g, synth_args);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
