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
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "qvarstep/dsp_filter.hpp"
#include "qvarstep/peak_detect.hpp"

namespace qvarstep {

struct StepEvent {
  std::size_t index = 0;  // absolute sample index since the counter started
  double prominence = 0.0;

  friend bool operator==(const StepEvent&, const StepEvent&) = default;
};

/// Real-time step counter over a causal filter and a ring of recent
/// filtered samples.
///
/// Sample t's arrival decides candidate c = t - latency(): c is emitted when
/// it is a peak of the buffered window under the batch rules (local maxima,
/// distance, prominence with the contour search bounded by the window) and
/// lies at least distance_min after the previously emitted step. Decisions
/// depend only on the sample sequence, so any chunking of the input yields
/// the same events.
///
/// buffer = max(4 * distance_min, 2 s); latency = max(distance_min, 0.5 s),
/// which leaves room to reach the trough after a step at cadences >= 1 Hz.
class StreamingCounter {
 public:
  StreamingCounter(const BandpassSpec& spec, const PeakParams& params)
      : cascade_(design_butterworth_bandpass(spec)), params_(params) {
    params_.validate();
    const auto d = static_cast<std::size_t>(params_.distance_min);
    const auto two_s = static_cast<std::size_t>(std::llround(2.0 * spec.fs_hz));
    const auto half_s = static_cast<std::size_t>(std::llround(0.5 * spec.fs_hz));
    capacity_ = std::max(4 * d, two_s);
    latency_ = std::max(d, half_s);
  }

  std::vector<StepEvent> push(std::span<const std::int32_t> chunk) {
    if (finished_) throw std::logic_error("StreamingCounter::push after finalize");
    std::vector<StepEvent> out;
    for (std::int32_t raw : chunk) {
      buffer_.push_back(cascade_.process(static_cast<double>(raw)));
      if (buffer_.size() > capacity_) {
        buffer_.pop_front();
        ++buffer_start_;
      }
      ++total_;
      if (total_ > latency_) decide(total_ - 1 - latency_, out);
    }
    return out;
  }

  /// Flushes undecided candidates using the final buffer. The counter
  /// accepts no further samples afterwards.
  std::vector<StepEvent> finalize() {
    std::vector<StepEvent> out;
    if (finished_) return out;
    finished_ = true;
    if (buffer_.size() < 3 || next_emit_floor_ >= total_) return out;
    window_.assign(buffer_.begin(), buffer_.end());
    for (const Peak& p : detect_peaks(window_, params_)) {
      const std::size_t abs = buffer_start_ + p.index;
      if (abs < next_emit_floor_) continue;
      emit(abs, p.prominence, out);
    }
    next_emit_floor_ = total_;
    return out;
  }

  std::size_t finalized_count() const noexcept { return finalized_count_; }
  std::size_t samples_seen() const noexcept { return total_; }
  std::size_t next_emit_floor() const noexcept { return next_emit_floor_; }
  std::size_t buffer_capacity() const noexcept { return capacity_; }
  std::size_t latency() const noexcept { return latency_; }
  const PeakParams& params() const noexcept { return params_; }
  bool finished() const noexcept { return finished_; }

 private:
  void decide(std::size_t candidate, std::vector<StepEvent>& out) {
    next_emit_floor_ = candidate + 1;
    if (candidate <= buffer_start_) return;
    const std::size_t local = candidate - buffer_start_;
    const double v = buffer_[local];
    // Cheap rejection before running the window analysis.
    if (buffer_[local - 1] > v || buffer_[local + 1] > v) return;
    window_.assign(buffer_.begin(), buffer_.end());
    for (const Peak& p : detect_peaks(window_, params_)) {
      if (p.index == local) {
        emit(candidate, p.prominence, out);
        return;
      }
      if (p.index > local) return;
    }
  }

  void emit(std::size_t index, double prominence, std::vector<StepEvent>& out) {
    if (last_emitted_ && index - *last_emitted_ < static_cast<std::size_t>(params_.distance_min)) return;
    last_emitted_ = index;
    ++finalized_count_;
    out.push_back({index, prominence});
  }

  BiquadCascade cascade_;
  PeakParams params_;
  std::size_t capacity_ = 0;
  std::size_t latency_ = 0;
  std::deque<double> buffer_;
  std::vector<double> window_;
  std::size_t buffer_start_ = 0;  // absolute index of buffer_.front()
  std::size_t total_ = 0;
  std::size_t next_emit_floor_ = 0;
  std::size_t finalized_count_ = 0;
  std::optional<std::size_t> last_emitted_;
  bool finished_ = false;
};

}  // namespace qvarstep
