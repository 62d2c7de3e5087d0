#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <string>

#include "novelty/error.hpp"
#include "novelty/pipeline.hpp"

namespace novelty::pipeline {
namespace {

std::string trim(std::string s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value, std::size_t line) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ValidationError("config line " + std::to_string(line) + ": invalid value '" +
                          value + "' for " + key);
  }
  return out;
}

}  // namespace

std::optional<std::size_t> WindowSchedule::window_for(Timestamp t) const {
  const auto it = std::upper_bound(
      windows.begin(), windows.end(), t,
      [](Timestamp v, const Window& w) { return v < w.score_start; });
  if (it == windows.begin()) return std::nullopt;
  const auto idx = static_cast<std::size_t>(std::distance(windows.begin(), it) - 1);
  if (t < windows[idx].score_end) return idx;
  return std::nullopt;
}

WindowSchedule build_schedule(Timestamp t_first, Timestamp t_last, const ScheduleConfig& cfg) {
  if (t_last < t_first) throw ValidationError("schedule end precedes start");
  if (cfg.train_days <= 0 || cfg.score_days <= 0) {
    throw ValidationError("schedule spans must be positive");
  }
  const Timestamp train = cfg.train_days * kSecondsPerDay;
  const Timestamp score = cfg.score_days * kSecondsPerDay;

  WindowSchedule schedule;
  for (Timestamp s = t_first + train; s < t_last; s += score) {
    Window w{s - train, s, s, s + score};
    if (s + score >= t_last) w.score_end = t_last + 1;
    schedule.windows.push_back(w);
  }
  if (schedule.windows.empty()) {
    schedule.warnings.push_back(
        "corpus spans " + std::to_string((t_last - t_first) / kSecondsPerDay) +
        " days, not longer than the " + std::to_string(cfg.train_days) +
        "-day training period; nothing to score");
  }
  return schedule;
}

PipelineConfig parse_config(std::istream& in, PipelineConfig cfg) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "components") {
      cfg.fit.components = parse_number<std::size_t>(key, value, line_no);
    } else if (key == "max_iters") {
      cfg.fit.max_iters = parse_number<std::size_t>(key, value, line_no);
    } else if (key == "rel_tol") {
      cfg.fit.rel_tol = parse_number<double>(key, value, line_no);
    } else if (key == "variance_floor") {
      cfg.fit.variance_floor = parse_number<double>(key, value, line_no);
    } else if (key == "seed") {
      cfg.fit.seed = parse_number<std::uint64_t>(key, value, line_no);
    } else if (key == "embed_pca") {
      const auto dim = parse_number<std::size_t>(key, value, line_no);
      cfg.embed_pca_dim = dim == 0 ? std::nullopt : std::optional<std::size_t>(dim);
    } else if (key == "train_days") {
      cfg.schedule.train_days = parse_number<std::int64_t>(key, value, line_no);
    } else if (key == "score_days") {
      cfg.schedule.score_days = parse_number<std::int64_t>(key, value, line_no);
    } else if (key == "min_user_shots") {
      cfg.min_user_shots = parse_number<std::size_t>(key, value, line_no);
    } else if (key == "threads") {
      cfg.fit.threads = parse_number<unsigned>(key, value, line_no);
    } else {
      throw ValidationError("config line " + std::to_string(line_no) + ": unknown key '" +
                            key + "'");
    }
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  return parse_config(in, std::move(base));
}

}  // namespace novelty::pipeline
