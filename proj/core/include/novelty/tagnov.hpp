#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "novelty/feature_store.hpp"

namespace novelty::tags {

/// Running tag counts over the images ingested so far.
class TagLedger {
 public:
  std::uint64_t count(const std::string& tag) const;
  std::uint64_t image_count() const { return images_; }
  std::size_t distinct_tags() const { return counts_.size(); }
  const std::unordered_map<std::string, std::uint64_t>& counts() const { return counts_; }

  // Each distinct tag counts once per image; duplicates are ignored.
  void ingest(std::span<const std::string> tags);

  bool operator==(const TagLedger&) const = default;

 private:
  std::unordered_map<std::string, std::uint64_t> counts_;
  std::uint64_t images_ = 0;
};

struct TagNovelty {
  double raw = 0.0;
  double normalized = 0.0;
};

/// Surprise of a focal image's tags against the ledger of strictly earlier
/// images. The focal image is included when estimating P(t), so
/// P(t) = (count(t) + 1) / (|I| + 1), and the normalizer ln(|I| + 1) is the
/// largest value raw can take.
TagNovelty tag_novelty(const TagLedger& ledger, std::span<const std::string> tags);

/// Convenience fold over a temporally sorted corpus: scores each shot
/// against all earlier shots, then ingests it.
std::vector<TagNovelty> tag_novelty_series(std::span<const store::ShotRecord> shots);

}  // namespace novelty::tags
