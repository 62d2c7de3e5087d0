#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "novelty/error.hpp"
#include "novelty/pipeline.hpp"

namespace novelty::pipeline {
namespace {

const std::vector<std::string> kColumns{
    "shot_id",       "user_id",       "timestamp",    "window",         "likes",
    "views",         "tagnov_raw",    "tagnov",       "comp_fvgmm",     "comp_fvgmm_scaled",
    "comp_fvmrf",    "comp_aic",      "incep_fvgmm",  "incep_fvgmm_scaled", "incep_fvmrf",
    "incep_aic",     "in_deg",        "out_deg",      "closeness",      "constraint",
    "density",       "n_prev_shots",  "days_active",
};

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ValidationError("scores line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

double to_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ValidationError("scores line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

std::uint64_t to_u64(const std::string& s, std::size_t line_no) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ValidationError("scores line " + std::to_string(line_no) + ": bad integer '" + s + "'");
  }
  return v;
}

}  // namespace

const std::vector<std::string>& score_columns() { return kColumns; }

std::string format_double(double v) {
  if (v == 0.0) return "0";  // folds -0
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw ValidationError("cannot format number");
  return std::string(buf, ptr);
}

void write_scores(std::span<const ShotScores> rows, std::ostream& out) {
  for (std::size_t i = 0; i < kColumns.size(); ++i) {
    out << (i ? "," : "") << kColumns[i];
  }
  out << '\n';
  const auto kind = [&](const std::optional<KindScores>& k) {
    if (!k) {
      out << ",,,,";
      return;
    }
    out << ',' << format_double(k->fvgmm_raw) << ',' << format_double(k->fvgmm_scaled) << ','
        << format_double(k->fvmrf) << ',' << format_double(k->aic);
  };
  for (const auto& r : rows) {
    out << quote(r.shot_id) << ',' << quote(r.user_id) << ',' << format_timestamp(r.timestamp)
        << ',' << r.window << ',' << r.likes << ',' << r.views << ','
        << format_double(r.tag.raw) << ',' << format_double(r.tag.normalized);
    kind(r.comp);
    kind(r.embed);
    out << ',' << r.network.in_degree << ',' << r.network.out_degree << ','
        << format_double(r.network.closeness) << ',' << format_double(r.network.constraint)
        << ',' << format_double(r.network.density) << ',' << r.n_prev_shots << ','
        << format_double(r.days_active) << '\n';
  }
}

void write_scores(std::span<const ShotScores> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_scores(rows, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<ShotScores> read_scores(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty scores file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line, 1);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const auto& name : kColumns) {
    if (!col.contains(name)) throw ValidationError("scores file lacks column '" + name + "'");
  }

  std::vector<ShotScores> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line, line_no);
    if (f.size() != header.size()) {
      throw ValidationError("scores line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(f.size()));
    }
    const auto get = [&](const char* name) -> const std::string& { return f[col.at(name)]; };
    const auto kind = [&](const char* prefix) -> std::optional<KindScores> {
      const std::string p(prefix);
      if (get((p + "_fvgmm").c_str()).empty()) return std::nullopt;
      return KindScores{to_double(get((p + "_fvgmm").c_str()), line_no),
                        to_double(get((p + "_fvgmm_scaled").c_str()), line_no),
                        to_double(get((p + "_fvmrf").c_str()), line_no),
                        to_double(get((p + "_aic").c_str()), line_no)};
    };
    ShotScores r;
    r.shot_id = get("shot_id");
    r.user_id = get("user_id");
    try {
      r.timestamp = parse_timestamp(get("timestamp"));
    } catch (const ValidationError& e) {
      throw ValidationError("scores line " + std::to_string(line_no) + ": " + e.what());
    }
    r.window = static_cast<std::size_t>(to_u64(get("window"), line_no));
    r.likes = to_u64(get("likes"), line_no);
    r.views = to_u64(get("views"), line_no);
    r.tag.raw = to_double(get("tagnov_raw"), line_no);
    r.tag.normalized = to_double(get("tagnov"), line_no);
    r.comp = kind("comp");
    r.embed = kind("incep");
    r.network.in_degree = to_u64(get("in_deg"), line_no);
    r.network.out_degree = to_u64(get("out_deg"), line_no);
    r.network.closeness = to_double(get("closeness"), line_no);
    r.network.constraint = to_double(get("constraint"), line_no);
    r.network.density = to_double(get("density"), line_no);
    r.n_prev_shots = to_u64(get("n_prev_shots"), line_no);
    r.days_active = to_double(get("days_active"), line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ShotScores> read_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scores file '" + path.string() + "'");
  return read_scores(in);
}

}  // namespace novelty::pipeline
