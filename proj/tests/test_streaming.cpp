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

#include <random>

#include "qvarstep/counter.hpp"
#include "qvarstep/streaming.hpp"
#include "qvarstep/synth.hpp"

namespace qvarstep {
namespace {

std::vector<StepEvent> run_chunked(const SampleSeries& s, const std::vector<std::size_t>& sizes,
                                   const PeakParams& params = kDefaultPeakParams) {
  StreamingCounter c({}, params);
  std::vector<StepEvent> all;
  std::size_t pos = 0, k = 0;
  while (pos < s.size()) {
    const std::size_t n = std::min(sizes[k++ % sizes.size()], s.size() - pos);
    for (const auto& e : c.push(s.samples().subspan(pos, n))) all.push_back(e);
    pos += n;
  }
  for (const auto& e : c.finalize()) all.push_back(e);
  return all;
}

TEST(Streaming, SizesFollowParams) {
  StreamingCounter c({}, {200.0, 50});
  EXPECT_EQ(c.latency(), 120u);
  EXPECT_EQ(c.buffer_capacity(), 480u);
  StreamingCounter wide({}, {200.0, 200});
  EXPECT_EQ(wide.latency(), 200u);
  EXPECT_EQ(wide.buffer_capacity(), 800u);
}

TEST(Streaming, ChunkingDoesNotMatter) {
  const auto sig = generate(make_preset(Preset::Noisy, Environment::ParkingLot, 40.0, 12));
  const auto whole = run_chunked(sig.series, {sig.series.size()});
  EXPECT_EQ(run_chunked(sig.series, {1}), whole);
  EXPECT_EQ(run_chunked(sig.series, {7, 1, 240, 33}), whole);
  std::mt19937_64 rng(1);
  std::vector<std::size_t> sizes(64);
  for (auto& n : sizes) n = std::uniform_int_distribution<std::size_t>(0, 500)(rng);
  sizes.push_back(1);
  EXPECT_EQ(run_chunked(sig.series, sizes), whole);
  EXPECT_FALSE(whole.empty());
}

TEST(Streaming, EmptyChunkIsANoOp) {
  StreamingCounter c({}, kDefaultPeakParams);
  const std::vector<std::int32_t> some(300, 5);
  c.push(some);
  const auto seen = c.samples_seen();
  const auto floor = c.next_emit_floor();
  EXPECT_TRUE(c.push(std::span<const std::int32_t>{}).empty());
  EXPECT_EQ(c.samples_seen(), seen);
  EXPECT_EQ(c.next_emit_floor(), floor);
}

TEST(Streaming, AgreesWithCausalBatch) {
  CountOptions causal;
  causal.mode = FilterMode::Causal;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto sig = generate(make_preset(Preset::Clean, Environment::ParkingLot, 120.0, seed));
    const auto events = run_chunked(sig.series, {24});
    const auto batch = count_steps_batch(sig.series, {}, kDefaultPeakParams, std::nullopt, causal);
    EXPECT_LE(std::abs(static_cast<long>(events.size()) - static_cast<long>(batch.count())), 2) << seed;
    for (std::size_t k = 1; k < events.size(); ++k) {
      EXPECT_GE(events[k].index, events[k - 1].index + 50);
      EXPECT_GE(events[k].prominence, 200.0);
    }
  }
}

TEST(Streaming, LastPeakOnlyAfterFinalize) {
  auto sc = make_preset(Preset::Clean, Environment::ParkingLot, 20.0, 4);
  sc.step_freq_sd_hz = 0.0;
  sc.step_freq_mean_hz = 1.5;
  const auto sig = generate(sc);
  CountOptions causal;
  causal.mode = FilterMode::Causal;
  const auto batch = count_steps_batch(sig.series, {}, kDefaultPeakParams, std::nullopt, causal);
  ASSERT_GE(batch.count(), 10u);
  const std::size_t target = batch.step_indices[batch.count() - 3];
  const SampleSeries cut = sig.series.slice(0, target + 60);  // shorter than the decision latency

  StreamingCounter c({}, kDefaultPeakParams);
  for (const auto& e : c.push(cut.samples())) EXPECT_LT(e.index, target);
  const auto tail = c.finalize();
  ASSERT_FALSE(tail.empty());
  EXPECT_EQ(tail.back().index, target);
}

TEST(Streaming, FinalizeContract) {
  StreamingCounter fresh({}, kDefaultPeakParams);
  EXPECT_TRUE(fresh.finalize().empty());
  EXPECT_TRUE(fresh.finalize().empty());
  const std::int32_t x[] = {1, 2, 3};
  EXPECT_THROW(fresh.push(x), std::logic_error);
}

TEST(Streaming, InvalidParams) {
  EXPECT_THROW(StreamingCounter({}, PeakParams{-5.0, 50}), Error);
  EXPECT_THROW(StreamingCounter(BandpassSpec{3.0, 1.0, 5, 240.0}, kDefaultPeakParams), Error);
}

}  // namespace
}  // namespace qvarstep
