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
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "qvarstep/error.hpp"

namespace qvarstep {

/// Acceptance thresholds for step peaks. Prominence is in the units of the
/// analysed signal (raw ADC counts after filtering); distance is in samples.
struct PeakParams {
  double prominence_min = 0.0;
  int distance_min = 1;

  void validate() const {
    if (!(prominence_min >= 0.0) || !std::isfinite(prominence_min)) {
      throw Error(ErrorCode::InvalidArgument, "prominence_min must be finite and >= 0");
    }
    if (distance_min < 1) throw Error(ErrorCode::InvalidArgument, "distance_min must be >= 1");
  }

  friend auto operator<=>(const PeakParams&, const PeakParams&) = default;
};

struct Peak {
  std::size_t index = 0;
  double height = 0.0;
  double prominence = 0.0;
  std::size_t left_base = 0;
  std::size_t right_base = 0;

  friend bool operator==(const Peak&, const Peak&) = default;
};

struct Prominence {
  double value = 0.0;
  std::size_t left_base = 0;
  std::size_t right_base = 0;
};

/// Indices of local maxima. A flat run bordered by lower samples on both
/// sides reports its middle index (the lower middle for even lengths).
/// Endpoints are never reported.
inline std::vector<std::size_t> find_local_maxima(std::span<const double> x) {
  if (x.size() < 3) throw Error(ErrorCode::SeriesTooShort, "local maxima need at least 3 samples");
  std::vector<std::size_t> out;
  const std::size_t last = x.size() - 1;
  std::size_t i = 1;
  while (i < last) {
    if (x[i - 1] < x[i]) {
      std::size_t ahead = i + 1;
      while (ahead < last && x[ahead] == x[i]) ++ahead;
      if (x[ahead] < x[i]) {
        out.push_back((i + ahead - 1) / 2);
        i = ahead;
      }
    }
    ++i;
  }
  return out;
}

namespace detail {

// True when the flat run containing `i` is bordered by strictly lower
// samples on both sides.
inline bool is_local_max(std::span<const double> x, std::size_t i) {
  if (i == 0 || i + 1 >= x.size()) return false;
  std::size_t l = i;
  while (l > 0 && x[l - 1] == x[i]) --l;
  std::size_t r = i;
  while (r + 1 < x.size() && x[r + 1] == x[i]) ++r;
  return l > 0 && r + 1 < x.size() && x[l - 1] < x[i] && x[r + 1] < x[i];
}

}  // namespace detail

/// Topographic prominence: on each side, scan outward to the nearest
/// strictly higher sample (or the series end) and take the minimum of that
/// span. The reference level is the higher of the two minima.
inline Prominence compute_prominence(std::span<const double> x, std::size_t peak) {
  if (!detail::is_local_max(x, peak)) throw Error(ErrorCode::NotAPeak, "index " + std::to_string(peak));
  const double h = x[peak];

  double left_min = h;
  std::size_t left_base = peak;
  for (std::size_t i = peak + 1; i-- > 0 && x[i] <= h;) {
    if (x[i] < left_min) {
      left_min = x[i];
      left_base = i;
    }
  }
  double right_min = h;
  std::size_t right_base = peak;
  for (std::size_t i = peak; i < x.size() && x[i] <= h; ++i) {
    if (x[i] < right_min) {
      right_min = x[i];
      right_base = i;
    }
  }
  return {h - std::max(left_min, right_min), left_base, right_base};
}

/// Greedy minimum-distance selection: visit peaks by descending height
/// (ties: smaller index first) and keep one unless an already kept peak lies
/// closer than `distance_min` samples. Returns kept indices ascending.
inline std::vector<std::size_t> enforce_distance(std::span<const std::size_t> indices, std::span<const double> heights,
                                                 int distance_min) {
  if (indices.size() != heights.size()) throw Error(ErrorCode::InvalidArgument, "indices/heights length mismatch");
  if (distance_min < 1) throw Error(ErrorCode::InvalidArgument, "distance_min must be >= 1");
  const std::size_t n = indices.size();
  const auto d = static_cast<std::size_t>(distance_min);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return heights[a] > heights[b]; });

  std::vector<char> keep(n, 1);
  for (std::size_t j : order) {
    if (!keep[j]) continue;
    for (std::size_t k = j; k-- > 0 && indices[j] - indices[k] < d;) keep[k] = 0;
    for (std::size_t k = j + 1; k < n && indices[k] - indices[j] < d; ++k) keep[k] = 0;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) out.push_back(indices[i]);
  }
  return out;
}

/// Local maxima, then the distance rule, then the prominence threshold.
/// Prominence is only computed for peaks that survive the distance rule.
inline std::vector<Peak> detect_peaks(std::span<const double> x, const PeakParams& params) {
  params.validate();
  const auto maxima = find_local_maxima(x);
  std::vector<double> heights;
  heights.reserve(maxima.size());
  for (std::size_t i : maxima) heights.push_back(x[i]);
  const auto survivors = params.distance_min > 1 ? enforce_distance(maxima, heights, params.distance_min) : maxima;

  std::vector<Peak> out;
  out.reserve(survivors.size());
  for (std::size_t i : survivors) {
    const Prominence p = compute_prominence(x, i);
    if (p.value >= params.prominence_min) out.push_back({i, x[i], p.value, p.left_base, p.right_base});
  }
  return out;
}

}  // namespace qvarstep
