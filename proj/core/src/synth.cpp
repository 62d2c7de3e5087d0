#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "novelty/error.hpp"
#include "novelty/pipeline.hpp"
#include "novelty/random.hpp"

namespace novelty::pipeline {
namespace {

constexpr std::size_t kBaseClusters = 4;
constexpr double kClusterScale = 2.0;
constexpr double kShiftDistance = 15.0;
constexpr double kObservationNoise = 0.1;
constexpr std::size_t kFollowsPerNewUser = 3;

std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

// Samples an index with probability proportional to weights.
std::size_t weighted_pick(Rng& rng, const std::vector<double>& weights, std::size_t limit) {
  double total = 0.0;
  for (std::size_t i = 0; i < limit; ++i) total += weights[i];
  const double target = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < limit; ++i) {
    acc += weights[i];
    if (acc > target) return i;
  }
  return limit - 1;
}

Eigen::MatrixXd random_loading(Rng& rng, std::size_t out_dim, std::size_t latent) {
  Eigen::MatrixXd w(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(latent));
  const double scale = 1.0 / std::sqrt(static_cast<double>(latent));
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.normal() * scale;
  return w;
}

}  // namespace

SynthCorpus synth_corpus(const SynthConfig& cfg) {
  if (cfg.n_shots < 1) throw ValidationError("synthetic corpus needs at least one shot");
  if (cfg.n_users < 1) throw ValidationError("synthetic corpus needs at least one user");
  if (cfg.span_days < 1 || cfg.latent_dim < 1 || cfg.comp_dim < 1 || cfg.embed_dim < 1 ||
      cfg.vocabulary < 1) {
    throw ValidationError("synthetic corpus dimensions must be positive");
  }
  Rng rng(cfg.seed);
  const Timestamp span = cfg.span_days * kSecondsPerDay;
  SynthCorpus corpus;

  // Users join over the first half of the span; each newcomer follows a few
  // earlier users with probability proportional to (followers + 1).
  std::vector<Timestamp> joined(cfg.n_users);
  std::vector<double> attractiveness(cfg.n_users, 1.0);
  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    joined[u] = cfg.start + static_cast<Timestamp>(
                                (static_cast<double>(u) / static_cast<double>(cfg.n_users)) *
                                0.5 * static_cast<double>(span));
  }
  for (std::size_t u = 1; u < cfg.n_users; ++u) {
    std::set<std::size_t> targets;
    const std::size_t want = std::min(u, kFollowsPerNewUser);
    while (targets.size() < want) targets.insert(weighted_pick(rng, attractiveness, u));
    for (std::size_t v : targets) {
      const Timestamp t = joined[u] + static_cast<Timestamp>(rng.below(7 * kSecondsPerDay));
      corpus.follows.push_back({numbered("u", u, 4), numbered("u", v, 4), t});
      attractiveness[v] += 1.0;
      if (rng.uniform() < 0.3) {
        const Timestamp back = t + static_cast<Timestamp>(rng.below(30 * kSecondsPerDay));
        corpus.follows.push_back({numbered("u", v, 4), numbered("u", u, 4), back});
        attractiveness[u] += 1.0;
      }
    }
  }
  std::sort(corpus.follows.begin(), corpus.follows.end(),
            [](const store::FollowEdge& a, const store::FollowEdge& b) {
              if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
              if (a.src != b.src) return a.src < b.src;
              return a.dst < b.dst;
            });

  // Latent cluster centers and the fixed maps into both feature spaces.
  const auto latent = static_cast<Eigen::Index>(cfg.latent_dim);
  std::vector<Eigen::VectorXd> centers;
  for (std::size_t c = 0; c < kBaseClusters; ++c) {
    Eigen::VectorXd v(latent);
    for (Eigen::Index j = 0; j < latent; ++j) v(j) = kClusterScale * rng.normal();
    centers.push_back(v);
  }
  Eigen::VectorXd shifted_center(latent);
  {
    Eigen::VectorXd direction(latent);
    for (Eigen::Index j = 0; j < latent; ++j) direction(j) = rng.normal();
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(latent);
    for (const auto& c : centers) centroid += c;
    centroid /= static_cast<double>(centers.size());
    shifted_center = centroid + kShiftDistance * direction.normalized();
  }
  const Eigen::MatrixXd comp_map = random_loading(rng, cfg.comp_dim, cfg.latent_dim);
  const Eigen::MatrixXd embed_map = random_loading(rng, cfg.embed_dim, cfg.latent_dim);

  std::vector<Timestamp> times(cfg.n_shots);
  for (auto& t : times) t = cfg.start + static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(span)));
  std::sort(times.begin(), times.end());

  std::vector<double> tag_weights(cfg.vocabulary);
  for (std::size_t i = 0; i < cfg.vocabulary; ++i) tag_weights[i] = 1.0 / static_cast<double>(i + 1);
  std::vector<double> author_weights(cfg.n_users);
  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    author_weights[u] = 1.0 / std::pow(static_cast<double>(u + 1), 0.7);
  }

  std::vector<std::string> ids;
  std::vector<float> comp_data;
  std::vector<float> embed_data;
  comp_data.reserve(cfg.n_shots * cfg.comp_dim);
  embed_data.reserve(cfg.n_shots * cfg.embed_dim);

  for (std::size_t i = 0; i < cfg.n_shots; ++i) {
    store::ShotRecord shot;
    shot.shot_id = numbered("s", i, 6);
    shot.timestamp = times[i];
    std::size_t active = 1;
    while (active < cfg.n_users && joined[active] <= shot.timestamp) ++active;
    shot.user_id = numbered("u", weighted_pick(rng, author_weights, active), 4);

    const std::size_t n_tags = 1 + rng.below(3);
    std::set<std::size_t> picked;
    while (picked.size() < std::min(n_tags, cfg.vocabulary)) {
      picked.insert(weighted_pick(rng, tag_weights, cfg.vocabulary));
    }
    for (std::size_t t : picked) shot.tags.push_back(numbered("t", t, 3));

    const bool shifted = cfg.trend_at && shot.timestamp >= *cfg.trend_at &&
                         rng.uniform() < cfg.planted_rate;
    Eigen::VectorXd z(latent);
    if (shifted) {
      shot.tags.push_back(cfg.planted_tag);
      corpus.shifted_shots.push_back(shot.shot_id);
      for (Eigen::Index j = 0; j < latent; ++j) z(j) = shifted_center(j) + rng.normal();
    } else {
      const auto& c = centers[rng.below(kBaseClusters)];
      for (Eigen::Index j = 0; j < latent; ++j) z(j) = c(j) + rng.normal();
    }
    const Eigen::VectorXd comp = comp_map * z;
    const Eigen::VectorXd embed = embed_map * z;
    for (Eigen::Index j = 0; j < comp.size(); ++j) {
      comp_data.push_back(static_cast<float>(comp(j) + kObservationNoise * rng.normal()));
    }
    for (Eigen::Index j = 0; j < embed.size(); ++j) {
      embed_data.push_back(static_cast<float>(embed(j) + kObservationNoise * rng.normal()));
    }

    shot.likes = static_cast<std::uint64_t>(std::floor(std::exp(rng.normal(2.0, 1.0))));
    shot.views = shot.likes * (5 + rng.below(20)) + rng.below(50);
    shot.media_ref = shot.shot_id + ".png";
    ids.push_back(shot.shot_id);
    corpus.shots.push_back(std::move(shot));
  }

  corpus.comp = store::FeaturePack(ids, cfg.comp_dim, std::move(comp_data), "compositional");
  corpus.embed = store::FeaturePack(std::move(ids), cfg.embed_dim, std::move(embed_data), "embedding");
  return corpus;
}

void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  store::write_shots(corpus.shots, dir / "shots.jsonl");
  store::write_follows(corpus.follows, dir / "follows.csv");
  // A fixed creation stamp keeps the output byte-identical across runs.
  const store::PackWriteOptions opts{
      corpus.shots.empty() ? std::string("1970-01-01T00:00:00Z")
                           : format_timestamp(corpus.shots.back().timestamp)};
  store::write_pack(corpus.comp, dir / "comp", opts);
  store::write_pack(corpus.embed, dir / "embed", opts);
}

}  // namespace novelty::pipeline
