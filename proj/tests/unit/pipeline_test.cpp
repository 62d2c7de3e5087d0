#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>

#include "novelty/error.hpp"
#include "novelty/pipeline.hpp"
#include "scratch_dir.hpp"

using namespace novelty;
using namespace novelty::pipeline;

namespace {

SynthConfig small_synth() {
  SynthConfig cfg;
  cfg.n_shots = 700;
  cfg.n_users = 25;
  cfg.embed_dim = 32;
  cfg.trend_at = parse_timestamp("2013-10-01");
  return cfg;
}

PipelineConfig small_pipeline() {
  PipelineConfig cfg;
  cfg.fit.components = 4;
  cfg.embed_pca_dim = 8;
  return cfg;
}

const SynthCorpus& corpus() {
  static const SynthCorpus c = synth_corpus(small_synth());
  return c;
}

const RunResult& result() {
  static const RunResult r =
      run(corpus().shots, corpus().follows, &corpus().comp, &corpus().embed, small_pipeline());
  return r;
}

std::string table_bytes(const RunResult& r) {
  std::ostringstream out;
  write_scores(r.rows, out);
  return out.str();
}

}  // namespace

TEST(Run, SingleShotGivesEmptyTable) {
  store::ShotRecord shot;
  shot.shot_id = "only";
  shot.user_id = "u";
  shot.timestamp = 1325376000;
  const store::FeaturePack pack({"only"}, 2, {0.5f, 1.5f});
  const std::vector<store::ShotRecord> shots{shot};
  const auto r = run(shots, {}, &pack, nullptr, small_pipeline());
  EXPECT_TRUE(r.rows.empty());
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Run, NeedsAPack) {
  EXPECT_THROW(run(corpus().shots, {}, nullptr, nullptr, small_pipeline()), ValidationError);
}

TEST(Run, NoLeakage) {
  const auto& r = result();
  ASSERT_FALSE(r.rows.empty());
  for (const auto& w : r.windows) {
    if (w.skipped || !w.latest_training_timestamp) continue;
    EXPECT_LT(*w.latest_training_timestamp, w.window.score_start);
    EXPECT_GE(*w.latest_training_timestamp, w.window.train_start);
  }
  std::set<std::string> seen;
  for (const auto& row : r.rows) {
    ASSERT_LT(row.window, r.windows.size());
    const auto& w = r.windows[row.window].window;
    EXPECT_GE(row.timestamp, w.score_start);
    EXPECT_LT(row.timestamp, w.score_end);
    EXPECT_TRUE(seen.insert(row.shot_id).second) << "scored twice: " << row.shot_id;
  }
}

TEST(Run, EveryShotAfterFirstYearIsScored) {
  const Timestamp first = corpus().shots.front().timestamp;
  const auto expected = std::count_if(corpus().shots.begin(), corpus().shots.end(), [&](const auto& s) {
    return s.timestamp >= first + 365 * kSecondsPerDay;
  });
  EXPECT_EQ(static_cast<std::ptrdiff_t>(result().rows.size()), expected);
  for (const auto& row : result().rows) {
    EXPECT_TRUE(row.comp.has_value());
    EXPECT_TRUE(row.embed.has_value());
  }
}

TEST(Run, ShiftedShotsScoreHigher) {
  const std::set<std::string> shifted(corpus().shifted_shots.begin(), corpus().shifted_shots.end());
  double s_sum = 0, h_sum = 0;
  std::size_t s_n = 0, h_n = 0;
  for (const auto& row : result().rows) {
    if (shifted.count(row.shot_id)) {
      s_sum += row.embed->fvgmm_scaled;
      ++s_n;
    } else {
      h_sum += row.embed->fvgmm_scaled;
      ++h_n;
    }
  }
  ASSERT_GT(s_n, 10u);
  ASSERT_GT(h_n, 10u);
  EXPECT_GT(s_sum / s_n, h_sum / h_n);
}

TEST(Run, Deterministic) {
  auto cfg = small_pipeline();
  cfg.fit.threads = 3;
  const auto again = run(corpus().shots, corpus().follows, &corpus().comp, &corpus().embed, cfg);
  EXPECT_EQ(table_bytes(again), table_bytes(result()));
}

TEST(Run, MissingPackRowsAreExcluded) {
  const auto& comp = corpus().comp;
  std::vector<std::string> ids;
  std::vector<float> data;
  std::set<std::string> dropped;
  for (std::size_t i = 0; i < comp.rows(); ++i) {
    if (i % 50 == 7) {
      dropped.insert(comp.ids()[i]);
      continue;
    }
    ids.push_back(comp.ids()[i]);
    const auto row = comp.row(i);
    data.insert(data.end(), row.begin(), row.end());
  }
  const store::FeaturePack partial(ids, comp.dim(), data, comp.kind());
  const auto r = run(corpus().shots, corpus().follows, &partial, nullptr, small_pipeline());
  EXPECT_EQ(std::set<std::string>(r.missing_shots.begin(), r.missing_shots.end()), dropped);
  for (const auto& row : r.rows) EXPECT_FALSE(dropped.count(row.shot_id)) << row.shot_id;
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Run, TinyWindowIsSkipped) {
  auto cfg = small_pipeline();
  cfg.fit.components = 5000;
  const auto r = run(corpus().shots, corpus().follows, &corpus().comp, nullptr, cfg);
  EXPECT_TRUE(r.rows.empty());
  for (const auto& w : r.windows) EXPECT_TRUE(w.skipped);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Run, PriorShotsAndNetwork) {
  for (const auto& row : result().rows) {
    const auto earlier = std::count_if(corpus().shots.begin(), corpus().shots.end(), [&](const auto& s) {
      return s.user_id == row.user_id &&
             (s.timestamp < row.timestamp || (s.timestamp == row.timestamp && s.shot_id < row.shot_id));
    });
    EXPECT_EQ(row.n_prev_shots, static_cast<std::uint64_t>(earlier));
    EXPECT_GE(row.days_active, 0.0);
  }
  const auto net = network_series(corpus().shots, corpus().follows);
  ASSERT_EQ(net.size(), corpus().shots.size());
  EXPECT_GT(std::count_if(net.begin(), net.end(), [](const auto& f) { return f.in_degree > 0; }), 0);
}

TEST(Scores, CsvRoundTrip) {
  std::ostringstream out;
  write_scores(result().rows, out);
  std::istringstream in(out.str());
  const auto back = read_scores(in);
  ASSERT_EQ(back.size(), result().rows.size());
  std::ostringstream again;
  write_scores(back, again);
  EXPECT_EQ(again.str(), out.str());
  EXPECT_EQ(back[3].embed->fvmrf, result().rows[3].embed->fvmrf);
}

TEST(Scores, ShortestRoundTripDoubles) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678, -0.0, 5e-324}) {
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Synth, SameSeedSameBytes) {
  testutil::ScratchDir a, b;
  write_corpus(synth_corpus(small_synth()), a.path());
  write_corpus(synth_corpus(small_synth()), b.path());
  for (const char* f : {"shots.jsonl", "follows.csv", "comp/data.f32le", "embed/data.f32le", "embed/ids.txt"}) {
    EXPECT_EQ(testutil::slurp(a / f), testutil::slurp(b / f)) << f;
  }
  auto other = small_synth();
  other.seed = 8;
  EXPECT_NE(synth_corpus(other).comp.row(0)[0], corpus().comp.row(0)[0]);
}

TEST(Synth, PlantedShiftAfterTrend) {
  const auto& c = corpus();
  const std::set<std::string> shifted(c.shifted_shots.begin(), c.shifted_shots.end());
  ASSERT_FALSE(shifted.empty());
  const Timestamp trend = *small_synth().trend_at;
  Eigen::VectorXd shifted_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c.embed.dim()));
  Eigen::VectorXd base_mean = shifted_mean;
  std::size_t ns = 0, nb = 0;
  for (const auto& s : c.shots) {
    const auto row = c.embed.row_vector(*c.embed.index_of(s.shot_id));
    const bool planted = std::find(s.tags.begin(), s.tags.end(), "neoglyph") != s.tags.end();
    if (shifted.count(s.shot_id)) {
      EXPECT_GE(s.timestamp, trend);
      EXPECT_TRUE(planted);
      shifted_mean += row;
      ++ns;
    } else {
      EXPECT_FALSE(planted);
      base_mean += row;
      ++nb;
    }
  }
  shifted_mean /= static_cast<double>(ns);
  base_mean /= static_cast<double>(nb);
  // The shifted centre sits well apart from the ordinary shots.
  EXPECT_GT((shifted_mean - base_mean).norm(), 1.0);
}

TEST(Synth, SingleUserHasNoFollows) {
  auto cfg = small_synth();
  cfg.n_users = 1;
  cfg.n_shots = 50;
  const auto c = synth_corpus(cfg);
  EXPECT_TRUE(c.follows.empty());
  EXPECT_EQ(c.shots.size(), 50u);
  EXPECT_EQ(c.comp.dim(), 47u);
}
