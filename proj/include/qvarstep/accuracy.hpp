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
#include <cstdio>
#include <cstdlib>
#include <string>

#include "qvarstep/error.hpp"

namespace qvarstep {

/// 1 - |measured - truth| / truth. Not clamped: wild overcounts go negative.
inline double accuracy(long measured, long truth) {
  if (truth <= 0) throw Error(ErrorCode::ZeroTruth, "truth must be positive, got " + std::to_string(truth));
  if (measured < 0) throw Error(ErrorCode::InvalidArgument, "measured count must be non-negative");
  return 1.0 - static_cast<double>(std::labs(measured - truth)) / static_cast<double>(truth);
}

/// Value in hundredths, rounded half up. The 1e-9 slack absorbs binary
/// representation error so that exact ties such as 1 - 4/160 = 0.975 round
/// up the way a decimal calculation does.
inline long round_hundredths(double value) { return static_cast<long>(std::floor(value * 100.0 + 0.5 + 1e-9)); }

inline double round_2dp(double value) { return static_cast<double>(round_hundredths(value)) / 100.0; }

/// Fixed two-decimal rendering consistent with round_hundredths.
inline std::string format_2dp(double value) {
  const long h = round_hundredths(value);
  const long mag = std::labs(h);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%ld.%02ld", h < 0 ? "-" : "", mag / 100, mag % 100);
  return buf;
}

}  // namespace qvarstep
