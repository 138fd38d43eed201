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

#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qvarstep/error.hpp"

namespace qvarstep {

/// In-place iterative radix-2 FFT. `data.size()` must be a power of two.
inline void fft_inplace(std::span<std::complex<double>> data) {
  const std::size_t n = data.size();
  if (n == 0 || !std::has_single_bit(n)) throw Error(ErrorCode::InvalidArgument, "FFT size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> w = std::polar(1.0, angle * static_cast<double>(k));
        const std::complex<double> u = data[start + k];
        const std::complex<double> v = data[start + k + len / 2] * w;
        data[start + k] = u + v;
        data[start + k + len / 2] = u - v;
      }
    }
  }
}

struct PsdEstimate {
  std::vector<double> freqs_hz;
  std::vector<double> psd;  // units^2 / Hz, one-sided
  std::size_t seg_len = 0;
  double overlap = 0.0;

  double bin_width_hz() const { return freqs_hz.size() > 1 ? freqs_hz[1] - freqs_hz[0] : 0.0; }
};

/// Welch estimate: periodic Hann window, per-segment mean removal, averaged
/// modified periodograms, density scaling, one-sided with interior bins
/// doubled.
inline PsdEstimate welch_psd(std::span<const double> x, double fs_hz, std::size_t seg_len = 1024, double overlap = 0.5) {
  if (seg_len < 2 || !std::has_single_bit(seg_len)) {
    throw Error(ErrorCode::InvalidSegment, "segment length must be a power of two >= 2");
  }
  if (!(overlap >= 0.0 && overlap < 1.0)) throw Error(ErrorCode::InvalidSegment, "overlap must be in [0, 1)");
  if (!(fs_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "fs_hz must be positive");
  if (x.size() < seg_len) {
    throw Error(ErrorCode::SeriesTooShort, "need at least " + std::to_string(seg_len) + " samples, got " +
                                               std::to_string(x.size()));
  }
  const auto overlap_samples = static_cast<std::size_t>(std::floor(overlap * static_cast<double>(seg_len)));
  const std::size_t step = seg_len - overlap_samples;

  std::vector<double> window(seg_len);
  double window_power = 0.0;
  for (std::size_t i = 0; i < seg_len; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(seg_len));
    window_power += window[i] * window[i];
  }

  const std::size_t bins = seg_len / 2 + 1;
  std::vector<double> acc(bins, 0.0);
  std::vector<std::complex<double>> buf(seg_len);
  std::size_t segments = 0;
  for (std::size_t start = 0; start + seg_len <= x.size(); start += step) {
    double mean = 0.0;
    for (std::size_t i = 0; i < seg_len; ++i) mean += x[start + i];
    mean /= static_cast<double>(seg_len);
    for (std::size_t i = 0; i < seg_len; ++i) buf[i] = {(x[start + i] - mean) * window[i], 0.0};
    fft_inplace(buf);
    for (std::size_t k = 0; k < bins; ++k) acc[k] += std::norm(buf[k]);
    ++segments;
  }

  PsdEstimate est;
  est.seg_len = seg_len;
  est.overlap = overlap;
  est.freqs_hz.resize(bins);
  est.psd.resize(bins);
  const double scale = 1.0 / (fs_hz * window_power * static_cast<double>(segments));
  for (std::size_t k = 0; k < bins; ++k) {
    est.freqs_hz[k] = static_cast<double>(k) * fs_hz / static_cast<double>(seg_len);
    const bool interior = k != 0 && k != bins - 1;
    est.psd[k] = acc[k] * scale * (interior ? 2.0 : 1.0);
  }
  return est;
}

/// Frequency of the strongest bin with low <= f <= high; ties go to the
/// lower frequency.
inline double dominant_frequency(const PsdEstimate& est, double low_hz = 0.5, double high_hz = 2.5) {
  std::size_t best = est.freqs_hz.size();
  for (std::size_t k = 0; k < est.freqs_hz.size(); ++k) {
    const double f = est.freqs_hz[k];
    if (f < low_hz || f > high_hz) continue;
    if (best == est.freqs_hz.size() || est.psd[k] > est.psd[best]) best = k;
  }
  if (best == est.freqs_hz.size()) {
    throw Error(ErrorCode::EmptyBand, "no frequency bin within [" + std::to_string(low_hz) + ", " +
                                          std::to_string(high_hz) + "] Hz");
  }
  return est.freqs_hz[best];
}

}  // namespace qvarstep
