// Copyright 2026 The qvarstep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <functional>
#include <sstream>

#include "qvarstep/manifest.hpp"
#include "qvarstep/signal_core.hpp"

namespace qvarstep {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no Error thrown";
  return ErrorCode::IoError;
}

TEST(Rational, ReducesAndNormalizesSign) {
  EXPECT_EQ(Rational::make(480, 2), (Rational{240, 1}));
  EXPECT_EQ(Rational::make(3, -6), (Rational{-1, 2}));
  EXPECT_EQ(code_of([] { Rational::make(1, 0); }), ErrorCode::InvalidArgument);
}

TEST(Volts, FullScaleHalfScaleZero) {
  EXPECT_DOUBLE_EQ(count_to_volts(65536), 1.8);
  EXPECT_DOUBLE_EQ(count_to_volts(0), 0.0);
  EXPECT_DOUBLE_EQ(count_to_volts(32768), 0.9);
  SampleSeries s({0, 32768, -65536});
  const auto v = counts_to_volts(s);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_DOUBLE_EQ(v[2], -1.8);
}

TEST(SampleSeries, RejectsOutOfRangeAndBadGaps) {
  EXPECT_EQ(code_of([] { SampleSeries({65537}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { SampleSeries({1, 2}, SampleRate{0, 1}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { SampleSeries({1, 2, 3}, SampleRate{240, 1}, std::nullopt, {0}); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { SampleSeries({1, 2, 3}, SampleRate{240, 1}, std::nullopt, {3}); }),
            ErrorCode::InvalidArgument);
}

TEST(SampleSeries, DurationIsExact) {
  SampleSeries s(std::vector<std::int32_t>(360), SampleRate{240, 1});
  EXPECT_EQ(s.duration(), (Rational{3, 2}));
  EXPECT_DOUBLE_EQ(s.duration_s(), 1.5);
}

TEST(SampleSeries, SliceKeepsInteriorGapsAndShiftsT0) {
  SampleSeries s({0, 1, 2, 3, 4, 5, 6, 7}, SampleRate{4, 1}, 1000, {2, 6});
  const auto sl = s.slice(1, 7);
  EXPECT_EQ(sl.size(), 6u);
  EXPECT_EQ(sl[0], 1);
  ASSERT_EQ(sl.gaps().size(), 2u);
  EXPECT_EQ(sl.gaps()[0], 1u);
  EXPECT_EQ(sl.gaps()[1], 5u);
  EXPECT_EQ(*sl.t0_unix_ms(), 1250);
  EXPECT_EQ(code_of([&] { s.slice(3, 9); }), ErrorCode::RangeOutOfBounds);
  EXPECT_EQ(code_of([&] { s.slice(5, 4); }), ErrorCode::RangeOutOfBounds);
}

TEST(SampleSeries, SplitAtGaps) {
  SampleSeries s({0, 1, 2, 3, 4, 5}, SampleRate{240, 1}, std::nullopt, {2, 5});
  const auto parts = s.split_at_gaps();
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[0].first, 0u);
  EXPECT_EQ(parts[1].first, 2u);
  EXPECT_EQ(parts[1].second.size(), 3u);
  EXPECT_EQ(parts[2].second[0], 5);
}

std::string csv_rows(int n, double dt) {
  std::ostringstream os;
  os << "t,qvar\n";
  os.precision(10);
  for (int i = 0; i < n; ++i) os << i * dt << "," << (i % 7) - 3 << "\n";
  return os.str();
}

TEST(Csv, OneSecondAt240Hz) {
  std::istringstream in(csv_rows(241, 1.0 / 240.0));
  const auto s = parse_csv(in);
  EXPECT_EQ(s.size(), 241u);
  EXPECT_EQ(s.sample_rate(), (Rational{240, 1}));
  EXPECT_FALSE(s.has_gaps());
  EXPECT_EQ(s[0], -3);
}

TEST(Csv, MalformedRow) {
  std::istringstream in("t,qvar\n0,1\n0.1,abc\n");
  EXPECT_EQ(code_of([&] { parse_csv(in); }), ErrorCode::MalformedRow);
  std::istringstream no_header("0,1\n");
  EXPECT_EQ(code_of([&] { parse_csv(no_header); }), ErrorCode::MalformedRow);
  std::istringstream extra("t,qvar\n0,1,2\n");
  EXPECT_EQ(code_of([&] { parse_csv(extra); }), ErrorCode::MalformedRow);
}

TEST(Csv, DuplicateTimestamp) {
  std::istringstream in("t,qvar\n0,1\n0.00417,2\n0.00417,3\n");
  EXPECT_EQ(code_of([&] { parse_csv(in); }), ErrorCode::NonMonotonicTime);
}

TEST(Csv, IrregularIntervalIsRateDeviation) {
  std::string text = "t,qvar\n";
  for (int i = 0; i < 50; ++i) text += std::to_string(i / 240.0) + ",0\n";
  text += std::to_string(49 / 240.0 + 1.2 / 240.0) + ",0\n";  // 20% long
  std::istringstream in(text);
  EXPECT_EQ(code_of([&] { parse_csv(in); }), ErrorCode::RateDeviation);
}

TEST(Csv, LongIntervalBecomesGapAndRoundTrips) {
  SampleSeries s({5, 6, 7, 8, 9, 10, 11, 12}, SampleRate{240, 1}, std::nullopt, {3});
  std::ostringstream out;
  write_csv(out, s);
  std::istringstream in(out.str());
  const auto back = parse_csv(in);
  EXPECT_EQ(back.size(), s.size());
  ASSERT_EQ(back.gaps().size(), 1u);
  EXPECT_EQ(back.gaps()[0], 3u);
  EXPECT_EQ(back.sample_rate(), s.sample_rate());
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(back[i], s[i]);
}

TEST(Csv, MissingFileIsIoError) {
  EXPECT_EQ(code_of([] { load_csv("/nonexistent/qvarstep.csv"); }), ErrorCode::IoError);
}

SessionManifest two_ranges(std::size_t end2) {
  SessionManifest m;
  m.subject_id = "S1";
  m.subsessions.push_back({Environment::ParkingLot, false, 0, 100, 10, {}});
  m.subsessions.push_back({Environment::ShoppingCenter, true, 100, end2, 12, {{"Fitbit", 11}}});
  return m;
}

TEST(Manifest, SliceSessionsLengths) {
  SampleSeries s(std::vector<std::int32_t>(250, 1));
  const auto out = slice_sessions(s, two_ranges(250));
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].second.size(), 100u);
  EXPECT_EQ(out[1].second.size(), 150u);
  EXPECT_TRUE(out[1].first.trolley);
}

TEST(Manifest, EndBeyondSeries) {
  SampleSeries s(std::vector<std::int32_t>(250, 1));
  EXPECT_EQ(code_of([&] { slice_sessions(s, two_ranges(300)); }), ErrorCode::RangeOutOfBounds);
}

TEST(Manifest, EmptySubsessionList) {
  SampleSeries s(std::vector<std::int32_t>(10, 1));
  SessionManifest m{"S2", {}};
  EXPECT_TRUE(slice_sessions(s, m).empty());
}

TEST(Manifest, OverlapAndNegativeTruthRejected) {
  auto m = two_ranges(250);
  m.subsessions[1].start_index = 90;
  EXPECT_EQ(code_of([&] { validate(m); }), ErrorCode::InvalidManifest);
  m = two_ranges(250);
  m.subsessions[0].truth_steps = -1;
  EXPECT_EQ(code_of([&] { validate(m); }), ErrorCode::InvalidManifest);
}

TEST(Manifest, JsonRoundTripWithMissingReference) {
  auto m = two_ranges(250);
  m.subsessions[0].reference_counts.push_back({"EarQvar", std::nullopt});
  const auto j = to_json(m);
  EXPECT_TRUE(j["subsessions"][0]["reference_counts"]["EarQvar"].is_null());
  EXPECT_EQ(manifest_from_json(j), m);
}

TEST(Manifest, MissingFieldAndUnknownEnv) {
  EXPECT_EQ(code_of([] { manifest_from_json(parse_json_text(R"({"subsessions": []})")); }),
            ErrorCode::InvalidManifest);
  const char* bad_env =
      R"({"subject_id":"a","subsessions":[{"env":"Beach","trolley":false,"start_index":0,"end_index":5,"truth_steps":1}]})";
  EXPECT_EQ(code_of([&] { manifest_from_json(parse_json_text(bad_env)); }), ErrorCode::InvalidManifest);
  EXPECT_EQ(code_of([] { parse_json_text("{not json"); }), ErrorCode::InvalidManifest);
}

}  // namespace
}  // namespace qvarstep
