#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "novelty/time.hpp"

namespace novelty::store {

/// One image post.
struct ShotRecord {
  std::string shot_id;
  std::string user_id;
  Timestamp timestamp = 0;
  std::vector<std::string> tags;  // lowercased, trimmed, deduplicated
  std::uint64_t likes = 0;
  std::uint64_t views = 0;
  std::string media_ref;
};

/// A timestamped directed follow relation: src started following dst.
struct FollowEdge {
  std::string src;
  std::string dst;
  Timestamp timestamp = 0;
};

/// Id-indexed dense matrix of per-shot feature vectors.
///
/// Rows are stored as 32-bit floats, exactly as they appear on disk, so a
/// write/read cycle is bitwise lossless. Numerical consumers widen to double
/// via to_matrix().
class FeaturePack {
 public:
  FeaturePack() = default;
  FeaturePack(std::vector<std::string> ids, std::size_t dim,
              std::vector<float> data, std::string kind = {});

  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t rows() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  const std::string& kind() const { return kind_; }
  std::span<const float> data() const { return data_; }
  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }

  std::optional<std::size_t> index_of(std::string_view id) const;

  // Throws ValidationError naming the first offending row or id.
  void validate() const;

  // Selected rows widened to 64-bit, in the given order.
  Eigen::MatrixXd to_matrix(std::span<const std::size_t> row_indices) const;
  Eigen::MatrixXd to_matrix() const;
  Eigen::VectorXd row_vector(std::size_t i) const;

 private:
  std::vector<std::string> ids_;
  std::size_t dim_ = 0;
  std::vector<float> data_;
  std::string kind_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct PackWriteOptions {
  // Value of the meta "created" field; current UTC time when empty.
  std::string created;
};

/// Writes meta, ids.txt and data.f32le into dir (created if missing).
/// The pack is validated before any file is touched.
void write_pack(const FeaturePack& pack, const std::filesystem::path& dir,
                const PackWriteOptions& options = {});

/// Reads and validates a pack directory written by write_pack or by the
/// embedding extractor.
FeaturePack read_pack(const std::filesystem::path& dir);

/// Lowercases (simple case mapping on UTF-8) and trims surrounding whitespace.
std::string normalize_tag(std::string_view tag);

/// Parses JSON-Lines shot records and returns them sorted by timestamp,
/// ties broken by shot_id. Errors carry the 1-based line number.
std::vector<ShotRecord> parse_shots(std::istream& in);
std::vector<ShotRecord> load_shots(const std::filesystem::path& path);

/// Parses "src,dst,timestamp" lines (an optional header line is skipped),
/// sorted by timestamp with ties broken by (src, dst).
std::vector<FollowEdge> parse_follows(std::istream& in);
std::vector<FollowEdge> load_follows(const std::filesystem::path& path);

void write_shots(std::span<const ShotRecord> shots, std::ostream& out);
void write_shots(std::span<const ShotRecord> shots,
                 const std::filesystem::path& path);
void write_follows(std::span<const FollowEdge> follows, std::ostream& out);
void write_follows(std::span<const FollowEdge> follows,
                   const std::filesystem::path& path);

/// Drops shots whose author has fewer than min_shots shots in the corpus.
std::vector<ShotRecord> filter_prolific_users(std::span<const ShotRecord> shots,
                                              std::size_t min_shots);

}  // namespace novelty::store
