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

#include <cmath>

#include "qvarstep/synth.hpp"

namespace qvarstep {
namespace {

TEST(Generate, ExactCadenceGivesDurationTimesFrequency) {
  GaitScenario s;
  s.step_freq_mean_hz = 2.0;
  s.step_freq_sd_hz = 0.0;
  const auto sig = generate(s);
  EXPECT_EQ(sig.truth.step_count(), 240u);
  EXPECT_EQ(sig.series.size(), 240u * 120u);
  EXPECT_NEAR(sig.realized_step_freq_hz, 2.0, 1e-9);
  EXPECT_DOUBLE_EQ(sig.truth.step_times_s.front(), 0.25);
}

TEST(Generate, SameSeedSameBits) {
  const auto s = make_preset(Preset::Noisy, Environment::ShoppingCenter, 30.0, 1234);
  const auto a = generate(s);
  const auto b = generate(s);
  EXPECT_EQ(a.series, b.series);
  EXPECT_EQ(a.truth.step_times_s, b.truth.step_times_s);
  auto other = s;
  other.seed = 1235;
  EXPECT_NE(generate(other).series, a.series);
}

TEST(Generate, CadenceStaysInWalkingBand) {
  GaitScenario s;
  s.step_freq_sd_hz = 0.6;  // wide enough that truncation matters
  s.seed = 3;
  const auto sig = generate(s);
  const auto& t = sig.truth.step_times_s;
  for (std::size_t k = 1; k < t.size(); ++k) {
    const double f = 1.0 / (t[k] - t[k - 1]);
    EXPECT_GT(f, 0.5);
    EXPECT_LT(f, 2.5);
  }
}

TEST(Generate, StepsOnlyInsideWalkSegments) {
  GaitScenario s;
  s.duration_s = 30.0;
  s.bouts = {{2.5, 1.5}, {2.5, 2.0}, {5.0, 16.5}};
  s.step_freq_sd_hz = 0.0;
  s.step_freq_mean_hz = 2.0;
  const auto sig = generate(s);
  ASSERT_EQ(sig.truth.walk_segments_s.size(), 3u);
  EXPECT_EQ(sig.truth.step_count(), 5u + 5u + 10u);
  for (double t : sig.truth.step_times_s) {
    bool inside = false;
    for (auto [b, e] : sig.truth.walk_segments_s) inside = inside || (t >= b && t < e);
    EXPECT_TRUE(inside) << t;
  }
  // nothing moves in the long final rest
  for (std::size_t i = static_cast<std::size_t>(15.0 * 240); i < sig.series.size(); ++i) EXPECT_EQ(sig.series[i], 0);
}

TEST(Generate, PulseIsBiphasicWithGivenSpacing) {
  GaitScenario s;
  s.duration_s = 4.0;
  s.step_freq_mean_hz = 0.6;
  s.step_freq_sd_hz = 0.0;
  s.step_amplitude_counts = 1000.0;
  const auto sig = generate(s);
  ASSERT_EQ(sig.truth.step_count(), 2u);
  const auto x = sig.series.samples().subspan(0, 240 * 2);
  const auto hi = std::max_element(x.begin(), x.end()) - x.begin();
  const auto lo = std::min_element(x.begin(), x.end()) - x.begin();
  EXPECT_NEAR(static_cast<double>(lo - hi), 0.15 * 240.0, 1.0);
  EXPECT_NEAR(x[static_cast<std::size_t>(hi)], 1000, 1);
  EXPECT_NEAR(x[static_cast<std::size_t>(lo)], -1000, 1);
  EXPECT_NEAR((static_cast<double>(hi + lo)) / 2.0, sig.truth.step_times_s[0] * 240.0, 1.0);
}

TEST(Generate, InvalidScenarios) {
  const auto code = [](GaitScenario s) {
    try {
      generate(s);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  GaitScenario s;
  s.duration_s = -1;
  EXPECT_EQ(code(s), ErrorCode::InvalidScenario);
  s = {};
  s.bouts = {{10, 10}};
  EXPECT_EQ(code(s), ErrorCode::InvalidScenario);
  s = {};
  s.drift = {DriftKind::Sinusoid, 0.5, 100.0, 0.0};
  EXPECT_EQ(code(s), ErrorCode::InvalidScenario);
  s = {};
  s.step_freq_mean_hz = 3.0;
  EXPECT_EQ(code(s), ErrorCode::InvalidScenario);
  s = {};
  s.noise_sd_counts = -1.0;
  EXPECT_EQ(code(s), ErrorCode::InvalidScenario);
}

TEST(Presets, NamesRoundTrip) {
  for (Preset p : {Preset::Clean, Preset::Noisy, Preset::Weak}) EXPECT_EQ(preset_from_string(to_string(p)), p);
  EXPECT_THROW(preset_from_string("loud"), Error);
  const auto noisy = make_preset(Preset::Noisy, Environment::ParkingLot, 60.0, 1);
  EXPECT_DOUBLE_EQ(noisy.noise_sd_counts, 0.5 * noisy.step_amplitude_counts);
}

TEST(Dataset, TenSubjectsFortySubsessions) {
  const auto ds = generate_dataset(10, preset_template(Preset::Clean), 42);
  ASSERT_EQ(ds.size(), 10u);
  std::size_t subs = 0;
  for (const auto& s : ds) {
    ASSERT_EQ(s.manifest.subsessions.size(), 4u);
    std::size_t expect_start = 0;
    std::size_t steps = 0;
    for (std::size_t c = 0; c < 4; ++c) {
      const auto& sub = s.manifest.subsessions[c];
      EXPECT_EQ(sub.env, kConditions[c].env);
      EXPECT_EQ(sub.trolley, kConditions[c].trolley);
      EXPECT_EQ(sub.start_index, expect_start);
      const double seconds = static_cast<double>(sub.end_index - sub.start_index) / 240.0;
      EXPECT_GE(seconds, 100.0);
      EXPECT_LE(seconds, 130.0);
      expect_start = sub.end_index;
      steps += static_cast<std::size_t>(sub.truth_steps);
      ++subs;
    }
    EXPECT_EQ(expect_start, s.series.size());
    EXPECT_EQ(steps, s.truth.step_count());
    EXPECT_NO_THROW(validate(s.manifest, s.series.size()));
  }
  EXPECT_EQ(subs, 40u);
  EXPECT_EQ(ds[0].manifest.subject_id, "S01");
  EXPECT_EQ(ds[9].manifest.subject_id, "S10");
}

TEST(Dataset, MasterSeedDeterminesEverything) {
  const auto a = generate_dataset(3, preset_template(Preset::Noisy), 5);
  const auto b = generate_dataset(3, preset_template(Preset::Noisy), 5);
  const auto c = generate_dataset(3, preset_template(Preset::Noisy), 6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].series, b[i].series);
    EXPECT_EQ(a[i].manifest, b[i].manifest);
  }
  EXPECT_NE(a[0].series, c[0].series);
  EXPECT_THROW(generate_dataset(0, preset_template(Preset::Clean), 1), Error);
}

TEST(Truth, Json) {
  GroundTruth t{{0.5, 1.0}, {{0.0, 2.0}}};
  const auto j = to_json(t);
  EXPECT_EQ(j["step_count"], 2);
  EXPECT_EQ(j["step_times_s"][1], 1.0);
}

}  // namespace
}  // namespace qvarstep
