#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "novelty/feature_store.hpp"
#include "novelty/gmm.hpp"
#include "novelty/netmet.hpp"
#include "novelty/tagnov.hpp"
#include "novelty/time.hpp"

namespace novelty::pipeline {

// Schedule -------------------------------------------------------------------

struct ScheduleConfig {
  std::int64_t train_days = 365;
  std::int64_t score_days = 91;
};

/// Half-open intervals [start, end).
struct Window {
  Timestamp train_start = 0;
  Timestamp train_end = 0;
  Timestamp score_start = 0;
  Timestamp score_end = 0;
};

struct WindowSchedule {
  std::vector<Window> windows;
  std::vector<std::string> warnings;

  // Index of the window scoring t, if any.
  std::optional<std::size_t> window_for(Timestamp t) const;
};

/// Trains on the first train_days, then scores consecutive score_days
/// blocks, each trained on the preceding train_days. Windows are emitted
/// while their score_start precedes t_last; the final window is closed at
/// t_last (inclusive), so it may be shorter or, when t_last sits exactly on a
/// block boundary, one second longer than score_days.
WindowSchedule build_schedule(Timestamp t_first, Timestamp t_last,
                              const ScheduleConfig& cfg = {});

// Configuration ----------------------------------------------------------------

struct PipelineConfig {
  gmm::FitConfig fit;
  // PCA dimension for the embedding pack; compositional packs are never
  // projected. Unset disables projection.
  std::optional<std::size_t> embed_pca_dim = 64;
  ScheduleConfig schedule;
  // Drop authors with fewer shots than this before scoring; 0 keeps all.
  std::size_t min_user_shots = 0;
};

/// key=value lines; '#' starts a comment. Unknown keys are errors.
/// Keys: components, max_iters, rel_tol, variance_floor, seed, embed_pca
/// (0 disables), train_days, score_days, min_user_shots, threads.
PipelineConfig parse_config(std::istream& in, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

// Scoring ----------------------------------------------------------------------

struct KindScores {
  double fvgmm_raw = 0.0;
  double fvgmm_scaled = 0.0;
  double fvmrf = 0.0;
  double aic = 0.0;
};

struct ShotScores {
  std::string shot_id;
  std::string user_id;
  Timestamp timestamp = 0;
  std::size_t window = 0;
  std::uint64_t likes = 0;
  std::uint64_t views = 0;
  tags::TagNovelty tag;
  std::optional<KindScores> comp;
  std::optional<KindScores> embed;
  net::NetworkFeatures network;
  // Author's shots strictly earlier in corpus order.
  std::uint64_t n_prev_shots = 0;
  // Days since the author's first shot.
  double days_active = 0.0;
};

struct WindowReport {
  Window window;
  std::size_t training_rows = 0;
  std::size_t scored_rows = 0;
  bool skipped = false;
  // Latest training timestamp, for leakage audits.
  std::optional<Timestamp> latest_training_timestamp;
};

struct RunResult {
  std::vector<ShotScores> rows;
  std::vector<WindowReport> windows;
  std::vector<std::string> warnings;
  std::vector<std::string> missing_shots;
};

/// Scores every shot after the first training year against the model fitted
/// on its window. Either pack may be null; at least one must be present.
/// Output is independent of cfg.fit.threads.
RunResult run(std::span<const store::ShotRecord> shots,
              std::span<const store::FollowEdge> follows,
              const store::FeaturePack* comp_pack, const store::FeaturePack* embed_pack,
              const PipelineConfig& cfg);

/// Network features of every shot's author at the shot's timestamp.
/// Authors absent from the snapshot get all-zero features.
std::vector<net::NetworkFeatures> network_series(std::span<const store::ShotRecord> shots,
                                                 std::span<const store::FollowEdge> follows);

// Score table I/O ----------------------------------------------------------------

/// Column order of scores.csv.
const std::vector<std::string>& score_columns();

void write_scores(std::span<const ShotScores> rows, std::ostream& out);
void write_scores(std::span<const ShotScores> rows, const std::filesystem::path& path);
std::vector<ShotScores> read_scores(std::istream& in);
std::vector<ShotScores> read_scores(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

// Synthetic corpus ------------------------------------------------------------------

struct SynthConfig {
  std::uint64_t seed = 7;
  std::size_t n_users = 50;
  std::size_t n_shots = 2000;
  Timestamp start = 1325376000;  // 2012-01-01T00:00:00Z
  std::int64_t span_days = 1095;
  // Shots after this instant may carry planted_tag and draw their features
  // from a shifted component.
  std::optional<Timestamp> trend_at;
  std::string planted_tag = "neoglyph";
  double planted_rate = 0.3;
  std::size_t comp_dim = 47;
  std::size_t embed_dim = 2048;
  std::size_t latent_dim = 8;
  std::size_t vocabulary = 300;
};

struct SynthCorpus {
  std::vector<store::ShotRecord> shots;
  std::vector<store::FollowEdge> follows;
  store::FeaturePack comp;
  store::FeaturePack embed;
  // Ground truth: shot ids drawn from the shifted component.
  std::vector<std::string> shifted_shots;
};

SynthCorpus synth_corpus(const SynthConfig& cfg);

/// Writes shots.jsonl, follows.csv, comp/ and embed/ into dir.
void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

}  // namespace novelty::pipeline
