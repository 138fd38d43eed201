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
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qvarstep/cli.hpp"

namespace qvarstep {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = cli::run(args, in, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("qvarstep_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST_F(Cli, SynthThenCountCleanWalk) {
  auto r = run_cli({"synth", "--out-dir", dir_.string(), "--duration", "120", "--seed", "5", "--frames"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto truth = nlohmann::json::parse(slurp(path("walk.truth.json")));
  const int steps = truth["step_count"];
  r = run_cli({"count", path("walk.csv"), "--truth", std::to_string(steps)});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(r.out);
  EXPECT_GE(report["accuracy"].get<double>(), 0.95);
  EXPECT_EQ(report["params"]["prominence"], 200.0);
  EXPECT_TRUE(fs::exists(path("walk.bin")));
}

TEST_F(Cli, CountReportToFileAndFilterDump) {
  ASSERT_EQ(run_cli({"synth", "--out-dir", dir_.string(), "--duration", "30"}).code, 0);
  const auto r = run_cli({"count", path("walk.csv"), "-o", path("r.json"), "--filter-out", path("f.json"), "--causal"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(slurp(path("r.json")))["filter_mode"], "Causal");
  const auto cascade = cascade_from_text(slurp(path("f.json")));
  EXPECT_EQ(cascade.sections().size(), 5u);
}

TEST_F(Cli, GapWithoutAllowGapsIsDataError) {
  std::ofstream(path("gap.csv")) << "t,qvar\n0,1\n0.1,2\n0.2,3\n0.4,4\n0.5,5\n";
  auto r = run_cli({"count", path("gap.csv")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("GapsPresent"), std::string::npos);
}

TEST_F(Cli, MalformedCsvAndMissingFile) {
  std::ofstream(path("bad.csv")) << "t,qvar\n0,1\n0.1,abc\n";
  auto r = run_cli({"count", path("bad.csv")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("MalformedRow"), std::string::npos);
  r = run_cli({"count", path("missing.csv")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("IoError"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"count"}).code, 2);
  EXPECT_EQ(run_cli({"count", "x.csv", "--distance", "0"}).code, 2);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST_F(Cli, EvalFixtureTable) {
  const auto r = run_cli({"eval", std::string(QVARSTEP_DATA_DIR) + "/table2_fixture.json", "--json", path("t.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Avg.            0.97      0.89      0.91       0.92\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("Avg.            0.20      0.88      0.92       0.94\n"), std::string::npos) << r.out;
  const auto j = nlohmann::json::parse(slurp(path("t.json")));
  EXPECT_EQ(j["conditions"].size(), 2u);
}

TEST_F(Cli, StreamMatchesFramesOnStdin) {
  ASSERT_EQ(run_cli({"synth", "--out-dir", dir_.string(), "--duration", "60", "--seed", "2", "--frames"}).code, 0);
  const auto r = run_cli({"stream"}, slurp(path("walk.bin")));
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  std::vector<StepEvent> events;
  StreamingCounter direct({}, kDefaultPeakParams);
  const auto series = load_csv(path("walk.csv"));
  auto expected = direct.push(series.samples());
  for (const auto& e : direct.finalize()) expected.push_back(e);
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    ASSERT_LT(n, expected.size());
    const auto comma = line.find(',');
    EXPECT_EQ(std::stoul(line.substr(0, comma)), expected[n].index);
    EXPECT_NEAR(std::stod(line.substr(comma + 1)), static_cast<double>(expected[n].index) / 240.0, 1e-6);
    ++n;
  }
  EXPECT_EQ(n, expected.size());
  EXPECT_GT(n, 90u);
}

TEST_F(Cli, StreamReportsGapsAndCorruption) {
  std::vector<std::int32_t> v(240 * 4, 0);
  const auto bytes = encode_frames(SampleSeries(v), 12);
  std::string s(bytes.begin(), bytes.end());
  const std::size_t fsz = frame_size(12);
  s.erase(10 * fsz, fsz);   // lose one frame
  s[20 * fsz + 9] ^= 0x11;  // corrupt another
  const auto r = run_cli({"stream"}, s);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("ChecksumMismatch"), std::string::npos);
  EXPECT_NE(r.err.find("gap of 1 frame"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
}

TEST_F(Cli, StreamBadMagic) {
  const auto r = run_cli({"stream"}, std::string("\x00\x01\x02\x03\x04\x05\x06\x07", 8));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("BadMagic"), std::string::npos);
}

TEST_F(Cli, PsdFindsCadence) {
  ASSERT_EQ(run_cli({"synth", "--out-dir", dir_.string(), "--duration", "120", "--seed", "9"}).code, 0);
  const auto r = run_cli({"psd", path("walk.csv"), "--svg", path("psd.svg")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string tag = "# dominant_frequency_hz ";
  ASSERT_EQ(r.out.rfind(tag, 0), 0u);
  const double f = std::stod(r.out.substr(tag.size()));
  EXPECT_NEAR(f, 1.98, 0.5);  // cadence is drawn per step around 1.98 Hz
  EXPECT_NE(r.out.find("freq_hz,psd\n"), std::string::npos);
  EXPECT_NE(slurp(path("psd.svg")).find("<svg"), std::string::npos);
}

TEST_F(Cli, TuneAndEvalOnSyntheticDataset) {
  ASSERT_EQ(run_cli({"synth", "--out-dir", dir_.string(), "--subjects", "2", "--seed", "3"}).code, 0);
  auto r = run_cli({"tune", path("dataset.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["per_session_best"].size(), 8u);
  EXPECT_TRUE(j["voted_params"].contains("prominence"));
  EXPECT_EQ(j["per_condition_means"].size(), 4u);
  r = run_cli({"eval", path("dataset.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("-- In shopping center without shopping trolley --"), std::string::npos);
  r = run_cli({"tune", path("dataset.json"), "--loo-vote"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["vote_mode"], "leave_one_out");
}

TEST_F(Cli, PlotHasTracesAndStars) {
  ASSERT_EQ(run_cli({"synth", "--out-dir", dir_.string(), "--duration", "20"}).code, 0);
  const auto r = run_cli({"plot", path("walk.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("<svg"), std::string::npos);
  EXPECT_NE(r.out.find("</svg>"), std::string::npos);
  EXPECT_NE(r.out.find("<polyline"), std::string::npos);
  EXPECT_NE(r.out.find("<polygon"), std::string::npos);
}

}  // namespace
}  // namespace qvarstep
