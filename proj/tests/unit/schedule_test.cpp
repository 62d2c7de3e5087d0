#include <gtest/gtest.h>

#include <sstream>

#include "novelty/error.hpp"
#include "novelty/pipeline.hpp"

using namespace novelty;
using namespace novelty::pipeline;

namespace {
constexpr Timestamp kDay = kSecondsPerDay;
constexpr Timestamp kT0 = 1325376000;
}  // namespace

TEST(Schedule, OneWindow) {
  const auto s = build_schedule(kT0, kT0 + 456 * kDay);
  ASSERT_EQ(s.windows.size(), 1u);
  EXPECT_EQ(s.windows[0].train_start, kT0);
  EXPECT_EQ(s.windows[0].train_end, kT0 + 365 * kDay);
  EXPECT_EQ(s.windows[0].score_start, kT0 + 365 * kDay);
}

TEST(Schedule, NoScorablePeriod) {
  const auto s = build_schedule(kT0, kT0 + 365 * kDay);
  EXPECT_TRUE(s.windows.empty());
  EXPECT_FALSE(s.warnings.empty());
  EXPECT_TRUE(build_schedule(kT0, kT0 + 10 * kDay).windows.empty());
}

TEST(Schedule, SecondWindowShiftsOneQuarter) {
  const auto s = build_schedule(kT0, kT0 + (365 + 2 * 91) * kDay);
  ASSERT_EQ(s.windows.size(), 2u);
  EXPECT_EQ(s.windows[1].train_start, kT0 + 91 * kDay);
  EXPECT_EQ(s.windows[1].train_end, kT0 + 456 * kDay);
  EXPECT_EQ(s.windows[1].score_start, kT0 + 456 * kDay);
}

TEST(Schedule, PartitionsTimelineAfterFirstYear) {
  const Timestamp last = kT0 + 1000 * kDay + 1234;
  const auto s = build_schedule(kT0, last);
  ASSERT_FALSE(s.windows.empty());
  for (std::size_t i = 0; i < s.windows.size(); ++i) {
    const auto& w = s.windows[i];
    EXPECT_EQ(w.train_end, w.score_start);
    EXPECT_EQ(w.train_end - w.train_start, 365 * kDay);
    if (i + 1 < s.windows.size()) {
      EXPECT_EQ(w.score_end, s.windows[i + 1].score_start);
      EXPECT_EQ(w.score_end - w.score_start, 91 * kDay);
    }
  }
  EXPECT_GT(s.windows.back().score_end, last);
  for (Timestamp t = kT0; t <= last; t += 3 * kDay + 17) {
    const auto w = s.window_for(t);
    EXPECT_EQ(w.has_value(), t >= kT0 + 365 * kDay) << t;
    if (w) {
      EXPECT_LE(s.windows[*w].score_start, t);
      EXPECT_LT(t, s.windows[*w].score_end);
    }
  }
  EXPECT_TRUE(s.window_for(last).has_value());
}

TEST(Schedule, CustomLengths) {
  const auto s = build_schedule(kT0, kT0 + 100 * kDay, {.train_days = 30, .score_days = 10});
  EXPECT_EQ(s.windows.size(), 7u);
}

TEST(Config, ParsesKeysAndComments) {
  std::istringstream in(
      "# comment\n"
      "components = 4\n"
      "seed=99\n"
      "embed_pca=0\n"
      "train_days=200  # inline\n"
      "\n"
      "min_user_shots=5\n"
      "variance_floor=1e-4\n");
  const auto cfg = parse_config(in);
  EXPECT_EQ(cfg.fit.components, 4u);
  EXPECT_EQ(cfg.fit.seed, 99u);
  EXPECT_FALSE(cfg.embed_pca_dim.has_value());
  EXPECT_EQ(cfg.schedule.train_days, 200);
  EXPECT_EQ(cfg.schedule.score_days, 91);
  EXPECT_EQ(cfg.min_user_shots, 5u);
  EXPECT_DOUBLE_EQ(cfg.fit.variance_floor, 1e-4);
}

TEST(Config, RejectsUnknownAndMalformed) {
  std::istringstream unknown("colour=blue\n");
  EXPECT_THROW(parse_config(unknown), ValidationError);
  std::istringstream malformed("components\n");
  EXPECT_THROW(parse_config(malformed), ValidationError);
  std::istringstream bad_value("components=many\n");
  EXPECT_THROW(parse_config(bad_value), ValidationError);
}
