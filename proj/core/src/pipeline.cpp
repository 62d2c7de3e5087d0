#include "novelty/pipeline.hpp"

#include <algorithm>
#include <unordered_map>

#include "novelty/error.hpp"
#include "novelty/fisher.hpp"
#include "novelty/model.hpp"
#include "novelty/parallel.hpp"

namespace novelty::pipeline {
namespace {

struct KindInput {
  const store::FeaturePack* pack;
  std::optional<std::size_t> pca_dim;
  std::vector<std::size_t> row_of_shot;  // pack row per shot index
};

KindScores score_point(const model::NoveltyModel& m, const Eigen::VectorXd& raw) {
  const Eigen::VectorXd x = m.prepare(raw);
  const auto fv = fisher::fvgmm_novelty(m.mixture, x, m.fvgmm_range);
  return {fv.raw, fv.scaled, fisher::fvmrf_novelty(m.mrf, x).score,
          gmm::aic_per_image(m.mixture, x)};
}

}  // namespace

std::vector<net::NetworkFeatures> network_series(std::span<const store::ShotRecord> shots,
                                                 std::span<const store::FollowEdge> follows) {
  const net::TemporalGraph graph(follows);
  net::SnapshotCursor cursor(graph);
  std::vector<net::NetworkFeatures> out;
  out.reserve(shots.size());
  for (const auto& s : shots) {
    const net::DiGraph& g = cursor.advance_to(s.timestamp);
    const auto id = g.find(s.user_id);
    out.push_back(id ? net::network_features(g, *id) : net::NetworkFeatures{});
  }
  return out;
}

RunResult run(std::span<const store::ShotRecord> input_shots,
              std::span<const store::FollowEdge> follows,
              const store::FeaturePack* comp_pack, const store::FeaturePack* embed_pack,
              const PipelineConfig& cfg) {
  if (!comp_pack && !embed_pack) throw ValidationError("run needs at least one feature pack");
  for (std::size_t i = 1; i < input_shots.size(); ++i) {
    const auto& a = input_shots[i - 1];
    const auto& b = input_shots[i];
    if (b.timestamp < a.timestamp || (b.timestamp == a.timestamp && b.shot_id < a.shot_id)) {
      throw ValidationError("shots must be sorted by (timestamp, shot_id)");
    }
  }

  RunResult result;
  std::vector<store::ShotRecord> filtered;
  std::span<const store::ShotRecord> shots = input_shots;
  if (cfg.min_user_shots > 0) {
    filtered = store::filter_prolific_users(input_shots, cfg.min_user_shots);
    shots = filtered;
  }
  if (shots.empty()) {
    result.warnings.push_back("empty corpus; nothing to score");
    return result;
  }

  std::vector<KindInput> kinds;
  if (comp_pack) kinds.push_back({comp_pack, std::nullopt, {}});
  if (embed_pack) kinds.push_back({embed_pack, cfg.embed_pca_dim, {}});

  std::vector<bool> usable(shots.size(), true);
  for (auto& kind : kinds) {
    kind.row_of_shot.assign(shots.size(), 0);
    for (std::size_t i = 0; i < shots.size(); ++i) {
      const auto row = kind.pack->index_of(shots[i].shot_id);
      if (row) {
        kind.row_of_shot[i] = *row;
      } else {
        usable[i] = false;
      }
    }
  }
  for (std::size_t i = 0; i < shots.size(); ++i) {
    if (!usable[i]) result.missing_shots.push_back(shots[i].shot_id);
  }
  if (!result.missing_shots.empty()) {
    result.warnings.push_back(std::to_string(result.missing_shots.size()) +
                              " shots missing from a feature pack were excluded");
  }

  const auto tag_scores = tags::tag_novelty_series(shots);
  const auto network = network_series(shots, follows);

  std::vector<std::uint64_t> prev_shots(shots.size());
  std::vector<double> days_active(shots.size());
  {
    std::unordered_map<std::string_view, std::pair<std::uint64_t, Timestamp>> seen;
    for (std::size_t i = 0; i < shots.size(); ++i) {
      auto [it, inserted] = seen.try_emplace(shots[i].user_id, 0, shots[i].timestamp);
      prev_shots[i] = it->second.first++;
      days_active[i] = static_cast<double>(shots[i].timestamp - it->second.second) /
                       static_cast<double>(kSecondsPerDay);
    }
  }

  const WindowSchedule schedule =
      build_schedule(shots.front().timestamp, shots.back().timestamp, cfg.schedule);
  result.warnings.insert(result.warnings.end(), schedule.warnings.begin(),
                         schedule.warnings.end());
  const unsigned threads = resolve_threads(cfg.fit.threads);

  for (std::size_t w = 0; w < schedule.windows.size(); ++w) {
    const Window& window = schedule.windows[w];
    WindowReport report{window, 0, 0, false, std::nullopt};

    std::vector<std::size_t> train;
    std::vector<std::size_t> score;
    for (std::size_t i = 0; i < shots.size(); ++i) {
      if (!usable[i]) continue;
      const Timestamp t = shots[i].timestamp;
      if (t >= window.train_start && t < window.train_end) {
        train.push_back(i);
        report.latest_training_timestamp =
            std::max(report.latest_training_timestamp.value_or(t), t);
      } else if (t >= window.score_start && t < window.score_end) {
        score.push_back(i);
      }
    }
    report.training_rows = train.size();
    if (train.size() < cfg.fit.components) {
      report.skipped = true;
      result.warnings.push_back("window " + std::to_string(w) + " skipped: " +
                                std::to_string(train.size()) + " training rows < " +
                                std::to_string(cfg.fit.components) + " components");
      result.windows.push_back(report);
      continue;
    }

    std::vector<std::vector<KindScores>> per_kind;
    for (const auto& kind : kinds) {
      std::vector<std::size_t> rows;
      rows.reserve(train.size());
      for (std::size_t i : train) rows.push_back(kind.row_of_shot[i]);
      gmm::FitConfig fit = cfg.fit;
      fit.pca_dim = kind.pca_dim;
      fit.seed = cfg.fit.seed + w;
      fit.threads = threads;
      const auto m = model::build_model(kind.pack->to_matrix(rows), fit);

      std::vector<KindScores> scores(score.size());
      parallel_for(score.size(), threads, [&](std::size_t k) {
        scores[k] = score_point(m, kind.pack->row_vector(kind.row_of_shot[score[k]]));
      });
      per_kind.push_back(std::move(scores));
    }

    for (std::size_t k = 0; k < score.size(); ++k) {
      const std::size_t i = score[k];
      const auto& s = shots[i];
      ShotScores row;
      row.shot_id = s.shot_id;
      row.user_id = s.user_id;
      row.timestamp = s.timestamp;
      row.window = w;
      row.likes = s.likes;
      row.views = s.views;
      row.tag = tag_scores[i];
      std::size_t kind_index = 0;
      if (comp_pack) row.comp = per_kind[kind_index++][k];
      if (embed_pack) row.embed = per_kind[kind_index++][k];
      row.network = network[i];
      row.n_prev_shots = prev_shots[i];
      row.days_active = days_active[i];
      result.rows.push_back(std::move(row));
    }
    report.scored_rows = score.size();
    result.windows.push_back(report);
  }
  return result;
}

}  // namespace novelty::pipeline
