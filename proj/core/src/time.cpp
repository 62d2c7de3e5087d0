#include "novelty/time.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

#include "novelty/error.hpp"

namespace novelty {
namespace {

int parse_digits(std::string_view text, std::size_t pos, std::size_t count,
                 std::string_view whole) {
  if (pos + count > text.size()) {
    throw ValidationError("unparseable timestamp '" + std::string(whole) + "'");
  }
  int value = 0;
  const char* first = text.data() + pos;
  const auto [ptr, ec] = std::from_chars(first, first + count, value);
  if (ec != std::errc{} || ptr != first + count) {
    throw ValidationError("unparseable timestamp '" + std::string(whole) + "'");
  }
  return value;
}

void expect_char(std::string_view text, std::size_t pos, char c,
                 std::string_view whole) {
  if (pos >= text.size() || text[pos] != c) {
    throw ValidationError("unparseable timestamp '" + std::string(whole) + "'");
  }
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  const std::string_view whole = text;
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' ||
                           text.back() == '\r')) {
    text.remove_suffix(1);
  }

  const int y = parse_digits(text, 0, 4, whole);
  expect_char(text, 4, '-', whole);
  const int mo = parse_digits(text, 5, 2, whole);
  expect_char(text, 7, '-', whole);
  const int d = parse_digits(text, 8, 2, whole);
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) {
    throw ValidationError("invalid calendar date in timestamp '" +
                          std::string(whole) + "'");
  }
  Timestamp seconds = sys_days{ymd}.time_since_epoch().count() * kSecondsPerDay;
  if (text.size() == 10) return seconds;

  if (text[10] != 'T' && text[10] != ' ') {
    throw ValidationError("unparseable timestamp '" + std::string(whole) + "'");
  }
  const int hh = parse_digits(text, 11, 2, whole);
  expect_char(text, 13, ':', whole);
  const int mm = parse_digits(text, 14, 2, whole);
  expect_char(text, 16, ':', whole);
  const int ss = parse_digits(text, 17, 2, whole);
  if (hh > 23 || mm > 59 || ss > 60) {
    throw ValidationError("time of day out of range in '" + std::string(whole) + "'");
  }
  seconds += hh * 3600 + mm * 60 + ss;

  std::size_t pos = 19;
  // Fractional seconds are truncated to second resolution.
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
  }
  if (pos == text.size()) return seconds;
  if (text[pos] == 'Z' && pos + 1 == text.size()) return seconds;
  if ((text[pos] == '+' || text[pos] == '-') && pos + 6 == text.size()) {
    const int oh = parse_digits(text, pos + 1, 2, whole);
    expect_char(text, pos + 3, ':', whole);
    const int om = parse_digits(text, pos + 4, 2, whole);
    const Timestamp offset = oh * 3600 + om * 60;
    return text[pos] == '+' ? seconds - offset : seconds + offset;
  }
  throw ValidationError("unparseable timestamp '" + std::string(whole) + "'");
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  Timestamp days = t / kSecondsPerDay;
  Timestamp rem = t % kSecondsPerDay;
  if (rem < 0) {
    rem += kSecondsPerDay;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 3600),
                static_cast<int>(rem / 60 % 60), static_cast<int>(rem % 60));
  return buf;
}

}  // namespace novelty
