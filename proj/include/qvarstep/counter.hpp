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

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qvarstep/accuracy.hpp"
#include "qvarstep/dsp_filter.hpp"
#include "qvarstep/error.hpp"
#include "qvarstep/peak_detect.hpp"
#include "qvarstep/signal_core.hpp"

namespace qvarstep {

enum class FilterMode { ZeroPhase, Causal };

/// Majority vote of the default grid over the clean synthetic dataset.
inline constexpr PeakParams kDefaultPeakParams{200.0, 50};

inline std::string to_string(FilterMode mode) { return mode == FilterMode::ZeroPhase ? "ZeroPhase" : "Causal"; }

struct CountOptions {
  FilterMode mode = FilterMode::ZeroPhase;
  bool allow_gaps = false;  // split at gaps instead of refusing the series
};

struct StepReport {
  std::vector<std::size_t> step_indices;
  std::vector<double> prominences;  // parallel to step_indices
  PeakParams params_used;
  FilterMode filter_mode = FilterMode::ZeroPhase;
  std::optional<int> truth;
  std::optional<double> accuracy;

  std::size_t count() const noexcept { return step_indices.size(); }
};

/// Filtered signal plus the boundaries of the gap-free segments it was
/// built from: segment i spans [boundaries[i], boundaries[i + 1]).
struct FilteredSignal {
  std::vector<double> values;
  std::vector<std::size_t> boundaries;
};

namespace detail {

inline BandpassSpec spec_for(const SampleSeries& series, const BandpassSpec& spec) {
  if (std::abs(spec.fs_hz - series.sample_rate_hz()) > 1e-9 * spec.fs_hz) {
    throw Error(ErrorCode::InvalidSpec, "filter designed for " + std::to_string(spec.fs_hz) + " Hz but series is " +
                                            std::to_string(series.sample_rate_hz()) + " Hz");
  }
  return spec;
}

}  // namespace detail

inline FilteredSignal filter_signal(const SampleSeries& series, const BandpassSpec& spec,
                                    const CountOptions& options = {}) {
  const BiquadCascade design = design_butterworth_bandpass(detail::spec_for(series, spec));
  if (series.has_gaps() && !options.allow_gaps) {
    throw Error(ErrorCode::GapsPresent, std::to_string(series.gaps().size()) +
                                            " gap(s) in series; pass allow_gaps to split at them");
  }
  FilteredSignal out;
  out.values.reserve(series.size());
  for (const auto& [offset, segment] : series.split_at_gaps()) {
    out.boundaries.push_back(offset);
    std::vector<double> y;
    if (options.mode == FilterMode::ZeroPhase) {
      y = filter_zero_phase(design, segment);
    } else {
      BiquadCascade cascade = design;
      y = filter_forward(cascade, segment);
    }
    out.values.insert(out.values.end(), y.begin(), y.end());
  }
  out.boundaries.push_back(series.size());
  return out;
}

/// Peaks detected independently within each gap-free segment, reported with
/// absolute indices.
inline std::vector<Peak> detect_steps(const FilteredSignal& filtered, const PeakParams& params) {
  std::vector<Peak> out;
  const std::span<const double> all(filtered.values);
  for (std::size_t s = 0; s + 1 < filtered.boundaries.size(); ++s) {
    const std::size_t begin = filtered.boundaries[s];
    const std::size_t end = filtered.boundaries[s + 1];
    if (end - begin < 3) continue;
    for (Peak p : detect_peaks(all.subspan(begin, end - begin), params)) {
      p.index += begin;
      p.left_base += begin;
      p.right_base += begin;
      out.push_back(p);
    }
  }
  return out;
}

inline StepReport make_report(const std::vector<Peak>& peaks, const PeakParams& params, FilterMode mode,
                              std::optional<int> truth) {
  StepReport report;
  report.params_used = params;
  report.filter_mode = mode;
  for (const Peak& p : peaks) {
    report.step_indices.push_back(p.index);
    report.prominences.push_back(p.prominence);
  }
  if (truth) {
    report.truth = truth;
    report.accuracy = accuracy(static_cast<long>(report.count()), *truth);
  }
  return report;
}

/// Bandpass filter, then prominence/distance peak detection. Zero-phase
/// filtering by default so step indices line up with the raw waveform.
inline StepReport count_steps_batch(const SampleSeries& series, const BandpassSpec& spec, const PeakParams& params,
                                    std::optional<int> truth = std::nullopt, const CountOptions& options = {}) {
  params.validate();
  if (truth && *truth <= 0) throw Error(ErrorCode::ZeroTruth, "truth must be positive");
  const FilteredSignal filtered = filter_signal(series, spec, options);
  return make_report(detect_steps(filtered, params), params, options.mode, truth);
}

/// {count, step_indices, params: {prominence, distance}, filter_mode, accuracy?}
inline nlohmann::ordered_json to_json(const StepReport& report) {
  nlohmann::ordered_json j;
  j["count"] = report.count();
  j["step_indices"] = report.step_indices;
  j["params"] = {{"prominence", report.params_used.prominence_min}, {"distance", report.params_used.distance_min}};
  j["filter_mode"] = to_string(report.filter_mode);
  if (report.accuracy) {
    j["accuracy"] = *report.accuracy;
    j["accuracy_2dp"] = format_2dp(*report.accuracy);
  }
  return j;
}

}  // namespace qvarstep
