#include "novelty/tagnov.hpp"

#include <algorithm>
#include <cmath>

namespace novelty::tags {
namespace {

std::vector<std::string> distinct(std::span<const std::string> tags) {
  std::vector<std::string> out(tags.begin(), tags.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

std::uint64_t TagLedger::count(const std::string& tag) const {
  const auto it = counts_.find(tag);
  return it == counts_.end() ? 0 : it->second;
}

void TagLedger::ingest(std::span<const std::string> tags) {
  for (const auto& t : distinct(tags)) ++counts_[t];
  ++images_;
}

TagNovelty tag_novelty(const TagLedger& ledger, std::span<const std::string> tags) {
  const auto focal = distinct(tags);
  if (focal.empty()) return {};
  const double denom = static_cast<double>(ledger.image_count()) + 1.0;
  double sum = 0.0;
  for (const auto& t : focal) {
    sum += std::log((static_cast<double>(ledger.count(t)) + 1.0) / denom);
  }
  TagNovelty out;
  out.raw = std::max(0.0, -sum / static_cast<double>(focal.size()));
  if (ledger.image_count() == 0) {
    out.normalized = 1.0;
  } else {
    out.normalized = std::clamp(out.raw / std::log(denom), 0.0, 1.0);
  }
  return out;
}

std::vector<TagNovelty> tag_novelty_series(std::span<const store::ShotRecord> shots) {
  std::vector<TagNovelty> out;
  out.reserve(shots.size());
  TagLedger ledger;
  for (const auto& s : shots) {
    out.push_back(tag_novelty(ledger, s.tags));
    ledger.ingest(s.tags);
  }
  return out;
}

}  // namespace novelty::tags
