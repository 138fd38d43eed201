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

#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qvarstep/error.hpp"

namespace qvarstep {

/// Exact positive rational number, always stored reduced with a positive
/// denominator.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t n, std::int64_t d) {
    if (d == 0) throw Error(ErrorCode::InvalidArgument, "rational with zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    const std::int64_t g = std::gcd(n, d);
    return g > 1 ? Rational{n / g, d / g} : Rational{n, d};
  }

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }

  friend bool operator==(const Rational&, const Rational&) = default;
};

/// Sample rate in Hz as an exact rational.
using SampleRate = Rational;

inline constexpr std::int64_t kDefaultRateHz = 240;
/// Volts per ADC count: 1.8 V full scale over a 16-bit code range.
inline constexpr double kVoltsPerCount = 1.8 / 65536.0;
inline constexpr std::int32_t kMaxAbsCount = 65536;

/// Uniformly sampled electrostatic signal in raw ADC counts.
///
/// `gaps()` lists sample indices at which a transport discontinuity was
/// detected: sample `g` is the first sample after missing data. Values are
/// immutable after construction.
class SampleSeries {
 public:
  SampleSeries() = default;

  explicit SampleSeries(std::vector<std::int32_t> samples,
                        SampleRate rate = SampleRate{kDefaultRateHz, 1},
                        std::optional<std::int64_t> t0_unix_ms = std::nullopt,
                        std::vector<std::size_t> gaps = {})
      : samples_(std::move(samples)), rate_(rate), t0_unix_ms_(t0_unix_ms), gaps_(std::move(gaps)) {
    if (rate_.num <= 0 || rate_.den <= 0) {
      throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
    }
    rate_ = Rational::make(rate_.num, rate_.den);
    if (t0_unix_ms_ && *t0_unix_ms_ < 0) {
      throw Error(ErrorCode::InvalidArgument, "t0_unix_ms must be non-negative");
    }
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (samples_[i] < -kMaxAbsCount || samples_[i] > kMaxAbsCount) {
        throw Error(ErrorCode::InvalidArgument,
                    "sample " + std::to_string(i) + " out of range: " + std::to_string(samples_[i]));
      }
    }
    std::sort(gaps_.begin(), gaps_.end());
    gaps_.erase(std::unique(gaps_.begin(), gaps_.end()), gaps_.end());
    for (std::size_t g : gaps_) {
      if (g == 0 || g >= samples_.size()) {
        throw Error(ErrorCode::InvalidArgument, "gap index " + std::to_string(g) + " outside series interior");
      }
    }
  }

  std::span<const std::int32_t> samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  std::int32_t operator[](std::size_t i) const { return samples_[i]; }

  SampleRate sample_rate() const noexcept { return rate_; }
  double sample_rate_hz() const noexcept { return rate_.value(); }
  std::optional<std::int64_t> t0_unix_ms() const noexcept { return t0_unix_ms_; }
  std::span<const std::size_t> gaps() const noexcept { return gaps_; }
  bool has_gaps() const noexcept { return !gaps_.empty(); }

  /// len / rate, exact.
  Rational duration() const {
    return Rational::make(static_cast<std::int64_t>(samples_.size()) * rate_.den, rate_.num);
  }
  double duration_s() const { return duration().value(); }

  /// Half-open sub-range [begin, end). Gaps inside the range are carried over.
  SampleSeries slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > samples_.size()) {
      throw Error(ErrorCode::RangeOutOfBounds, "slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                                                   ") outside series of length " + std::to_string(samples_.size()));
    }
    std::vector<std::size_t> gaps;
    for (std::size_t g : gaps_) {
      if (g > begin && g < end) gaps.push_back(g - begin);
    }
    std::optional<std::int64_t> t0;
    if (t0_unix_ms_) {
      t0 = *t0_unix_ms_ + static_cast<std::int64_t>(begin) * 1000 * rate_.den / rate_.num;
    }
    return SampleSeries(std::vector<std::int32_t>(samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                                                  samples_.begin() + static_cast<std::ptrdiff_t>(end)),
                        rate_, t0, std::move(gaps));
  }

  /// Contiguous gap-free pieces, each paired with its offset in this series.
  std::vector<std::pair<std::size_t, SampleSeries>> split_at_gaps() const {
    std::vector<std::pair<std::size_t, SampleSeries>> out;
    std::size_t begin = 0;
    for (std::size_t g : gaps_) {
      out.emplace_back(begin, slice(begin, g));
      begin = g;
    }
    out.emplace_back(begin, slice(begin, samples_.size()));
    return out;
  }

  friend bool operator==(const SampleSeries&, const SampleSeries&) = default;

 private:
  std::vector<std::int32_t> samples_;
  SampleRate rate_{kDefaultRateHz, 1};
  std::optional<std::int64_t> t0_unix_ms_;
  std::vector<std::size_t> gaps_;
};

inline double count_to_volts(std::int32_t count) noexcept { return static_cast<double>(count) * kVoltsPerCount; }

inline std::vector<double> counts_to_volts(const SampleSeries& series) {
  std::vector<double> out;
  out.reserve(series.size());
  for (std::int32_t c : series.samples()) out.push_back(count_to_volts(c));
  return out;
}

/// Raw counts as doubles, the working representation of the filters.
inline std::vector<double> as_real(const SampleSeries& series) {
  return {series.samples().begin(), series.samples().end()};
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace detail

/// Parses the `t,qvar` CSV format: a header line followed by `seconds,count`
/// rows. The sample rate is inferred from the regular sampling intervals and
/// rounded to the nearest integer Hz. Intervals longer than 1.5 nominal
/// periods are recorded as gaps; any other interval deviating more than 1%
/// from the inferred period is a RateDeviation.
inline SampleSeries parse_csv(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  bool header_seen = false;
  std::vector<double> times;
  std::vector<std::int32_t> counts;
  while (std::getline(in, line)) {
    ++row;
    const std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      std::string compact;
      for (char c : view) {
        if (c != ' ' && c != '\t') compact.push_back(c);
      }
      if (compact != "t,qvar") {
        throw Error(ErrorCode::MalformedRow, "row 1: expected header 't,qvar', got '" + std::string(view) + "'");
      }
      continue;
    }
    const auto comma = view.find(',');
    double t = 0.0;
    std::int64_t count = 0;
    if (comma == std::string_view::npos || view.find(',', comma + 1) != std::string_view::npos ||
        !detail::parse_number(view.substr(0, comma), t) || !std::isfinite(t) ||
        !detail::parse_number(view.substr(comma + 1), count)) {
      throw Error(ErrorCode::MalformedRow, "row " + std::to_string(row) + ": '" + std::string(view) + "'");
    }
    if (count < -kMaxAbsCount || count > kMaxAbsCount) {
      throw Error(ErrorCode::MalformedRow, "row " + std::to_string(row) + ": count out of range");
    }
    if (!times.empty() && !(t > times.back())) {
      throw Error(ErrorCode::NonMonotonicTime, "row " + std::to_string(row) + ": time " + std::string(view.substr(0, comma)) +
                                                   " does not increase");
    }
    times.push_back(t);
    counts.push_back(static_cast<std::int32_t>(count));
  }
  if (!header_seen) throw Error(ErrorCode::MalformedRow, "empty file, missing 't,qvar' header");
  if (times.size() < 2) return SampleSeries(std::move(counts));

  std::vector<double> intervals(times.size() - 1);
  for (std::size_t i = 0; i + 1 < times.size(); ++i) intervals[i] = times[i + 1] - times[i];
  std::vector<double> sorted = intervals;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
  const double median = sorted[sorted.size() / 2];

  double regular_span = 0.0;
  std::size_t regular_count = 0;
  for (double dt : intervals) {
    if (dt <= 1.5 * median) {
      regular_span += dt;
      ++regular_count;
    }
  }
  const auto rate_hz = static_cast<std::int64_t>(std::llround(static_cast<double>(regular_count) / regular_span));
  if (rate_hz <= 0) throw Error(ErrorCode::RateDeviation, "inferred sample rate rounds to 0 Hz");

  std::vector<std::size_t> gaps;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const double periods = intervals[i] * static_cast<double>(rate_hz);
    if (intervals[i] > 1.5 * median) {
      gaps.push_back(i + 1);
    } else if (std::abs(periods - 1.0) > 0.01) {
      // Data rows start at line 2; interval i ends on data row i + 1.
      throw Error(ErrorCode::RateDeviation, "interval ending at data row " + std::to_string(i + 2) + " deviates " +
                                                std::to_string(std::abs(periods - 1.0) * 100.0) + "% from " +
                                                std::to_string(rate_hz) + " Hz");
    }
  }
  return SampleSeries(std::move(counts), SampleRate{rate_hz, 1}, std::nullopt, std::move(gaps));
}

inline SampleSeries load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return parse_csv(in);
}

/// Writes the series in the `t,qvar` format. Timestamps carry enough digits
/// to round-trip the sample rate.
inline void write_csv(std::ostream& out, const SampleSeries& series) {
  out << "t,qvar\n";
  char buf[64];
  const Rational rate = series.sample_rate();
  std::size_t next_gap = 0;
  std::size_t skipped = 0;
  const auto gaps = series.gaps();
  for (std::size_t i = 0; i < series.size(); ++i) {
    // A gap is rendered as one missing sample period so that re-reading
    // reproduces the gap position.
    if (next_gap < gaps.size() && gaps[next_gap] == i) {
      ++skipped;
      ++next_gap;
    }
    const double t = static_cast<double>(static_cast<std::int64_t>(i + skipped) * rate.den) / static_cast<double>(rate.num);
    std::snprintf(buf, sizeof(buf), "%.9f,%d\n", t, series[i]);
    out << buf;
  }
}

}  // namespace qvarstep
