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

#include <stdexcept>
#include <string>
#include <string_view>

namespace qvarstep {

/// Typed failure kinds surfaced by the library. The CLI prints the name of
/// the code as the first token of its error line.
enum class ErrorCode {
  InvalidArgument,
  MalformedRow,
  NonMonotonicTime,
  RateDeviation,
  BadMagic,
  ChecksumMismatch,
  TruncatedFrame,
  RangeOutOfBounds,
  InvalidManifest,
  InvalidSpec,
  SeriesTooShort,
  NotAPeak,
  InvalidSegment,
  EmptyBand,
  GapsPresent,
  ZeroTruth,
  EmptyInput,
  InvalidScenario,
  IoError,
};

constexpr std::string_view code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::RateDeviation: return "RateDeviation";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::TruncatedFrame: return "TruncatedFrame";
    case ErrorCode::RangeOutOfBounds: return "RangeOutOfBounds";
    case ErrorCode::InvalidManifest: return "InvalidManifest";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::NotAPeak: return "NotAPeak";
    case ErrorCode::InvalidSegment: return "InvalidSegment";
    case ErrorCode::EmptyBand: return "EmptyBand";
    case ErrorCode::GapsPresent: return "GapsPresent";
    case ErrorCode::ZeroTruth: return "ZeroTruth";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qvarstep
