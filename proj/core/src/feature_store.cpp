#include "novelty/feature_store.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "novelty/error.hpp"

namespace novelty::store {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kMetaFile = "meta";
constexpr const char* kIdsFile = "ids.txt";
constexpr const char* kDataFile = "data.f32le";

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Simple one-to-one lowercase mapping for the alphabetic blocks tags are
// realistically written in. Code points outside these ranges are unchanged.
char32_t to_lower(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if ((c >= 0xC0 && c <= 0xDE) && c != 0xD7) return c + 32;
  if (c >= 0x100 && c <= 0x17F) {
    if (c == 0x130) return U'i';
    if ((c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E)) {
      return (c % 2 == 1) ? c + 1 : c;
    }
    if (c == 0x138 || c == 0x149 || c == 0x17F) return c;
    if (c == 0x178) return 0xFF;
    return (c % 2 == 0) ? c + 1 : c;
  }
  if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 32;
  if (c >= 0x386 && c <= 0x38F) {
    switch (c) {
      case 0x386: return 0x3AC;
      case 0x388: return 0x3AD;
      case 0x389: return 0x3AE;
      case 0x38A: return 0x3AF;
      case 0x38C: return 0x3CC;
      case 0x38E: return 0x3CD;
      case 0x38F: return 0x3CE;
      default: return c;
    }
  }
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' ||
         c == U'\v' || c == 0xA0 || c == 0x3000 || (c >= 0x2000 && c <= 0x200A);
}

std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int len = 1;
    char32_t cp = b0;
    if (b0 >= 0xF0 && b0 < 0xF8) {
      len = 4;
      cp = b0 & 0x07;
    } else if (b0 >= 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if (b0 >= 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if (b0 >= 0x80) {
      throw ValidationError("invalid UTF-8 in tag");
    }
    if (i + len > s.size()) throw ValidationError("truncated UTF-8 in tag");
    for (int k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) throw ValidationError("invalid UTF-8 in tag");
      cp = (cp << 6) | (b & 0x3F);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

void write_bytes(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

std::string now_utc() {
  const auto now = std::chrono::system_clock::now();
  return format_timestamp(
      std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch())
          .count());
}

std::string line_error(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

std::uint64_t count_field(const json& obj, const char* key, std::size_t line) {
  if (!obj.contains(key) || obj[key].is_null()) return 0;
  const json& v = obj[key];
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    const auto i = v.get<std::int64_t>();
    if (i >= 0) return static_cast<std::uint64_t>(i);
  }
  throw ValidationError(line_error(line, std::string("'") + key +
                                              "' must be a nonnegative integer"));
}

std::string string_field(const json& obj, const char* key, std::size_t line,
                         bool required) {
  if (!obj.contains(key) || obj[key].is_null()) {
    if (required) {
      throw ValidationError(line_error(line, std::string("missing '") + key + "'"));
    }
    return {};
  }
  if (!obj[key].is_string()) {
    throw ValidationError(line_error(line, std::string("'") + key +
                                               "' must be a string"));
  }
  return obj[key].get<std::string>();
}

}  // namespace

FeaturePack::FeaturePack(std::vector<std::string> ids, std::size_t dim,
                         std::vector<float> data, std::string kind)
    : ids_(std::move(ids)), dim_(dim), data_(std::move(data)), kind_(std::move(kind)) {
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
}

std::optional<std::size_t> FeaturePack::index_of(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void FeaturePack::validate() const {
  if (dim_ == 0) throw ValidationError("feature pack dim must be positive");
  if (data_.size() != ids_.size() * dim_) {
    throw ValidationError("feature pack has " + std::to_string(data_.size()) +
                          " values, expected rows*dim = " +
                          std::to_string(ids_.size() * dim_));
  }
  if (index_.size() != ids_.size()) {
    std::unordered_set<std::string_view> seen;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (!seen.insert(ids_[i]).second) {
        throw ValidationError("duplicate id '" + ids_[i] + "' at row " +
                              std::to_string(i));
      }
    }
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    const std::string& id = ids_[i];
    if (id.empty() || id.find('\n') != std::string::npos ||
        id.find('\r') != std::string::npos) {
      throw ValidationError("invalid id at row " + std::to_string(i));
    }
  }
  for (std::size_t r = 0; r < ids_.size(); ++r) {
    for (std::size_t c = 0; c < dim_; ++c) {
      if (!std::isfinite(data_[r * dim_ + c])) {
        throw ValidationError("non-finite value in row " + std::to_string(r) +
                              " (column " + std::to_string(c) + ", id '" +
                              ids_[r] + "')");
      }
    }
  }
}

Eigen::MatrixXd FeaturePack::to_matrix(std::span<const std::size_t> row_indices) const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(row_indices.size()),
                    static_cast<Eigen::Index>(dim_));
  for (std::size_t r = 0; r < row_indices.size(); ++r) {
    const auto src = row(row_indices[r]);
    for (std::size_t c = 0; c < dim_; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = src[c];
    }
  }
  return m;
}

Eigen::MatrixXd FeaturePack::to_matrix() const {
  std::vector<std::size_t> all(rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return to_matrix(all);
}

Eigen::VectorXd FeaturePack::row_vector(std::size_t i) const {
  const auto src = row(i);
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim_));
  for (std::size_t c = 0; c < dim_; ++c) v(static_cast<Eigen::Index>(c)) = src[c];
  return v;
}

void write_pack(const FeaturePack& pack, const fs::path& dir,
                const PackWriteOptions& options) {
  pack.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

  std::string meta;
  meta += "n=" + std::to_string(pack.rows()) + "\n";
  meta += "dim=" + std::to_string(pack.dim()) + "\n";
  meta += "created=" + (options.created.empty() ? now_utc() : options.created) + "\n";
  meta += "kind=" + pack.kind() + "\n";

  std::string ids;
  for (const auto& id : pack.ids()) {
    ids += id;
    ids += '\n';
  }

  std::string data;
  data.resize(pack.data().size() * 4);
  std::size_t pos = 0;
  for (float f : pack.data()) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    data[pos++] = static_cast<char>(bits & 0xFF);
    data[pos++] = static_cast<char>((bits >> 8) & 0xFF);
    data[pos++] = static_cast<char>((bits >> 16) & 0xFF);
    data[pos++] = static_cast<char>((bits >> 24) & 0xFF);
  }

  write_bytes(dir / kIdsFile, ids);
  write_bytes(dir / kDataFile, data);
  write_bytes(dir / kMetaFile, meta);
}

FeaturePack read_pack(const fs::path& dir) {
  std::map<std::string, std::string> meta;
  {
    std::istringstream in(read_bytes(dir / kMetaFile));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ValidationError("malformed meta line '" + line + "' in " + dir.string());
      }
      meta[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  const auto require = [&](const char* key) -> std::size_t {
    const auto it = meta.find(key);
    if (it == meta.end()) {
      throw ValidationError(std::string("meta missing '") + key + "' in " + dir.string());
    }
    try {
      std::size_t used = 0;
      const auto v = std::stoull(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument(key);
      return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw ValidationError(std::string("meta '") + key + "' is not an integer");
    }
  };
  const std::size_t n = require("n");
  const std::size_t dim = require("dim");
  if (dim == 0) throw ValidationError("meta dim must be positive");

  std::vector<std::string> ids;
  {
    const std::string raw = read_bytes(dir / kIdsFile);
    std::size_t start = 0;
    while (start < raw.size()) {
      auto end = raw.find('\n', start);
      if (end == std::string::npos) end = raw.size();
      std::string id = raw.substr(start, end - start);
      if (!id.empty() && id.back() == '\r') id.pop_back();
      ids.push_back(std::move(id));
      start = end + 1;
    }
  }
  if (ids.size() != n) {
    throw ValidationError("ids.txt has " + std::to_string(ids.size()) +
                          " ids but meta n=" + std::to_string(n));
  }

  const std::string raw = read_bytes(dir / kDataFile);
  const std::size_t expected = n * dim * 4;
  if (raw.size() != expected) {
    throw ValidationError("data.f32le size mismatch: expected " +
                          std::to_string(expected) + " bytes, got " +
                          std::to_string(raw.size()) + " bytes");
  }
  std::vector<float> data(n * dim);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto* b = reinterpret_cast<const unsigned char*>(raw.data() + 4 * i);
    const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                               (static_cast<std::uint32_t>(b[1]) << 8) |
                               (static_cast<std::uint32_t>(b[2]) << 16) |
                               (static_cast<std::uint32_t>(b[3]) << 24);
    data[i] = std::bit_cast<float>(bits);
  }
  const auto kind_it = meta.find("kind");
  FeaturePack pack(std::move(ids), dim, std::move(data),
                   kind_it == meta.end() ? std::string{} : kind_it->second);
  pack.validate();
  return pack;
}

std::string normalize_tag(std::string_view tag) {
  auto cps = decode_utf8(tag);
  std::size_t begin = 0;
  std::size_t end = cps.size();
  while (begin < end && is_space(cps[begin])) ++begin;
  while (end > begin && is_space(cps[end - 1])) --end;
  std::string out;
  out.reserve(tag.size());
  for (std::size_t i = begin; i < end; ++i) append_utf8(out, to_lower(cps[i]));
  return out;
}

std::vector<ShotRecord> parse_shots(std::istream& in) {
  std::vector<ShotRecord> shots;
  std::unordered_map<std::string, std::size_t> first_line;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(line_error(line_no, std::string("malformed record: ") + e.what()));
    }
    if (!obj.is_object()) throw ValidationError(line_error(line_no, "record is not an object"));

    ShotRecord rec;
    rec.shot_id = string_field(obj, "shot_id", line_no, true);
    rec.user_id = string_field(obj, "user_id", line_no, true);
    if (rec.shot_id.empty()) throw ValidationError(line_error(line_no, "empty shot_id"));
    const std::string ts = string_field(obj, "timestamp", line_no, true);
    try {
      rec.timestamp = parse_timestamp(ts);
    } catch (const ValidationError& e) {
      throw ValidationError(line_error(line_no, e.what()));
    }
    if (obj.contains("tags") && !obj["tags"].is_null()) {
      if (!obj["tags"].is_array()) {
        throw ValidationError(line_error(line_no, "'tags' must be an array of strings"));
      }
      for (const auto& t : obj["tags"]) {
        if (!t.is_string()) {
          throw ValidationError(line_error(line_no, "'tags' must be an array of strings"));
        }
        std::string norm;
        try {
          norm = normalize_tag(t.get<std::string>());
        } catch (const ValidationError& e) {
          throw ValidationError(line_error(line_no, e.what()));
        }
        if (norm.empty()) continue;
        if (std::find(rec.tags.begin(), rec.tags.end(), norm) == rec.tags.end()) {
          rec.tags.push_back(std::move(norm));
        }
      }
    }
    rec.likes = count_field(obj, "likes", line_no);
    rec.views = count_field(obj, "views", line_no);
    rec.media_ref = string_field(obj, "media_ref", line_no, false);

    const auto [it, inserted] = first_line.emplace(rec.shot_id, line_no);
    if (!inserted) {
      throw ValidationError(line_error(line_no, "duplicate shot_id '" + rec.shot_id +
                                                    "' (first seen on line " +
                                                    std::to_string(it->second) + ")"));
    }
    shots.push_back(std::move(rec));
  }
  std::sort(shots.begin(), shots.end(), [](const ShotRecord& a, const ShotRecord& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.shot_id < b.shot_id;
  });
  return shots;
}

std::vector<ShotRecord> load_shots(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open shots file '" + path.string() + "'");
  return parse_shots(in);
}

std::vector<FollowEdge> parse_follows(std::istream& in) {
  std::vector<FollowEdge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line_no == 1 && line.rfind("src,dst", 0) == 0) continue;

    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
      throw ValidationError(line_error(line_no, "expected 'src,dst,timestamp'"));
    }
    FollowEdge edge;
    edge.src = line.substr(0, c1);
    edge.dst = line.substr(c1 + 1, c2 - c1 - 1);
    if (edge.src.empty() || edge.dst.empty()) {
      throw ValidationError(line_error(line_no, "empty user id"));
    }
    if (edge.src == edge.dst) {
      throw ValidationError(line_error(line_no, "self-follow edge for '" + edge.src + "'"));
    }
    try {
      edge.timestamp = parse_timestamp(std::string_view(line).substr(c2 + 1));
    } catch (const ValidationError& e) {
      throw ValidationError(line_error(line_no, e.what()));
    }
    edges.push_back(std::move(edge));
  }
  std::sort(edges.begin(), edges.end(), [](const FollowEdge& a, const FollowEdge& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    if (a.src != b.src) return a.src < b.src;
    return a.dst < b.dst;
  });
  return edges;
}

std::vector<FollowEdge> load_follows(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open follows file '" + path.string() + "'");
  return parse_follows(in);
}

void write_shots(std::span<const ShotRecord> shots, std::ostream& out) {
  for (const auto& s : shots) {
    json obj = json::object();
    obj["shot_id"] = s.shot_id;
    obj["user_id"] = s.user_id;
    obj["timestamp"] = format_timestamp(s.timestamp);
    obj["tags"] = s.tags;
    obj["likes"] = s.likes;
    obj["views"] = s.views;
    obj["media_ref"] = s.media_ref;
    out << obj.dump() << '\n';
  }
}

void write_shots(std::span<const ShotRecord> shots, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_shots(shots, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_follows(std::span<const FollowEdge> follows, std::ostream& out) {
  for (const auto& e : follows) {
    out << e.src << ',' << e.dst << ',' << format_timestamp(e.timestamp) << '\n';
  }
}

void write_follows(std::span<const FollowEdge> follows, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_follows(follows, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<ShotRecord> filter_prolific_users(std::span<const ShotRecord> shots,
                                              std::size_t min_shots) {
  std::unordered_map<std::string_view, std::size_t> per_user;
  for (const auto& s : shots) ++per_user[s.user_id];
  std::vector<ShotRecord> kept;
  for (const auto& s : shots) {
    if (per_user[s.user_id] >= min_shots) kept.push_back(s);
  }
  return kept;
}

}  // namespace novelty::store
