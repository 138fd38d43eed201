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
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qvarstep/error.hpp"
#include "qvarstep/signal_core.hpp"

namespace qvarstep {

// Notification frame layout (all multi-byte fields little-endian):
//
//   0x51 0x56 | seq:u32 | n:u8 (1..255) | n x sample:i16 | xor:u8
//
// The trailing byte is the XOR of every preceding byte of the frame.
inline constexpr std::uint8_t kFrameMagic0 = 0x51;
inline constexpr std::uint8_t kFrameMagic1 = 0x56;
inline constexpr std::size_t kFrameHeaderBytes = 7;
inline constexpr std::size_t kMaxSamplesPerFrame = 255;

inline constexpr std::size_t frame_size(std::size_t n_samples) noexcept { return kFrameHeaderBytes + 2 * n_samples + 1; }

struct Frame {
  std::uint32_t seq = 0;
  std::vector<std::int16_t> samples;
};

struct FrameGap {
  std::size_t frame_position = 0;  // index into FrameStream::frames of the first frame after the gap
  std::size_t sample_index = 0;    // first sample after the gap in the decoded series
  std::uint32_t missing_frames = 0;
};

struct FrameWarning {
  ErrorCode code;
  std::size_t byte_offset = 0;
  std::string detail;
};

struct FrameStream {
  std::vector<Frame> frames;
  std::vector<FrameGap> gaps;
  std::vector<FrameWarning> warnings;
};

inline std::vector<std::uint8_t> encode_frame(std::uint32_t seq, std::span<const std::int16_t> samples) {
  if (samples.empty() || samples.size() > kMaxSamplesPerFrame) {
    throw Error(ErrorCode::InvalidArgument, "frame must carry 1..255 samples");
  }
  std::vector<std::uint8_t> out;
  out.reserve(frame_size(samples.size()));
  out.push_back(kFrameMagic0);
  out.push_back(kFrameMagic1);
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(seq >> shift));
  out.push_back(static_cast<std::uint8_t>(samples.size()));
  for (std::int16_t s : samples) {
    const auto u = static_cast<std::uint16_t>(s);
    out.push_back(static_cast<std::uint8_t>(u & 0xFF));
    out.push_back(static_cast<std::uint8_t>(u >> 8));
  }
  std::uint8_t x = 0;
  for (std::uint8_t b : out) x ^= b;
  out.push_back(x);
  return out;
}

/// Splits the series into frames of at most `per_frame` samples with
/// consecutive sequence numbers starting at `first_seq`.
inline std::vector<std::uint8_t> encode_frames(const SampleSeries& series, std::size_t per_frame = 12,
                                               std::uint32_t first_seq = 0) {
  if (per_frame == 0 || per_frame > kMaxSamplesPerFrame) {
    throw Error(ErrorCode::InvalidArgument, "per_frame must be 1..255");
  }
  std::vector<std::uint8_t> out;
  std::vector<std::int16_t> chunk;
  std::uint32_t seq = first_seq;
  for (std::size_t i = 0; i < series.size(); i += per_frame) {
    chunk.clear();
    for (std::size_t j = i; j < std::min(series.size(), i + per_frame); ++j) {
      const std::int32_t v = series[j];
      if (v < INT16_MIN || v > INT16_MAX) {
        throw Error(ErrorCode::InvalidArgument, "sample " + std::to_string(j) + " does not fit a 16-bit frame field");
      }
      chunk.push_back(static_cast<std::int16_t>(v));
    }
    const auto bytes = encode_frame(seq++, chunk);
    out.insert(out.end(), bytes.begin(), bytes.end());
  }
  return out;
}

/// Incremental frame parser. Bytes may arrive in arbitrary pieces; complete
/// frames are returned as soon as they are available.
///
/// A frame failing its checksum is dropped with a ChecksumMismatch warning;
/// the resulting sequence discontinuity is recorded as a gap when the next
/// good frame arrives. A frame whose sequence number does not increase is
/// dropped with a warning. Missing magic bytes are fatal (BadMagic) because
/// frame boundaries can no longer be trusted.
class FrameDecoder {
 public:
  struct Accepted {
    Frame frame;
    bool after_gap = false;
    std::uint32_t missing_frames = 0;
  };

  std::vector<Accepted> feed(std::span<const std::uint8_t> bytes) {
    pending_.insert(pending_.end(), bytes.begin(), bytes.end());
    std::vector<Accepted> out;
    std::size_t pos = 0;
    while (pending_.size() - pos >= 2) {
      if (pending_[pos] != kFrameMagic0 || pending_[pos + 1] != kFrameMagic1) {
        throw Error(ErrorCode::BadMagic, "at byte offset " + std::to_string(consumed_ + pos));
      }
      if (pending_.size() - pos < kFrameHeaderBytes) break;
      const std::size_t n = pending_[pos + 6];
      if (n == 0) {
        throw Error(ErrorCode::BadMagic, "zero-length frame at byte offset " + std::to_string(consumed_ + pos));
      }
      const std::size_t size = frame_size(n);
      if (pending_.size() - pos < size) break;

      const std::uint8_t* f = pending_.data() + pos;
      const std::size_t offset = consumed_ + pos;
      pos += size;
      std::uint8_t x = 0;
      for (std::size_t i = 0; i + 1 < size; ++i) x ^= f[i];
      if (x != f[size - 1]) {
        warnings_.push_back({ErrorCode::ChecksumMismatch, offset, "frame dropped"});
        continue;
      }
      Frame frame;
      frame.seq = static_cast<std::uint32_t>(f[2]) | static_cast<std::uint32_t>(f[3]) << 8 |
                  static_cast<std::uint32_t>(f[4]) << 16 | static_cast<std::uint32_t>(f[5]) << 24;
      if (last_seq_ && frame.seq <= *last_seq_) {
        warnings_.push_back({ErrorCode::InvalidArgument, offset,
                             "non-increasing seq " + std::to_string(frame.seq) + ", frame dropped"});
        continue;
      }
      frame.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto lo = static_cast<std::uint16_t>(f[kFrameHeaderBytes + 2 * i]);
        const auto hi = static_cast<std::uint16_t>(f[kFrameHeaderBytes + 2 * i + 1]);
        frame.samples[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | hi << 8));
      }
      Accepted acc;
      if (last_seq_ && frame.seq != *last_seq_ + 1) {
        acc.after_gap = true;
        acc.missing_frames = frame.seq - *last_seq_ - 1;
      }
      last_seq_ = frame.seq;
      acc.frame = std::move(frame);
      out.push_back(std::move(acc));
    }
    pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(pos));
    consumed_ += pos;
    return out;
  }

  /// Reports a TruncatedFrame warning if bytes of an incomplete frame remain.
  void finish() {
    if (!pending_.empty()) {
      warnings_.push_back({ErrorCode::TruncatedFrame, consumed_,
                           std::to_string(pending_.size()) + " trailing byte(s) of an incomplete frame"});
      consumed_ += pending_.size();
      pending_.clear();
    }
  }

  const std::vector<FrameWarning>& warnings() const noexcept { return warnings_; }

 private:
  std::vector<std::uint8_t> pending_;
  std::size_t consumed_ = 0;
  std::optional<std::uint32_t> last_seq_;
  std::vector<FrameWarning> warnings_;
};

struct DecodedFrames {
  SampleSeries series;
  FrameStream stream;
};

/// Decodes a complete byte stream. Samples are concatenated in arrival order;
/// gaps are recorded on both the frame stream and the series, never filled.
inline DecodedFrames decode_frames(std::span<const std::uint8_t> bytes, SampleRate rate = SampleRate{kDefaultRateHz, 1}) {
  FrameDecoder decoder;
  auto accepted = decoder.feed(bytes);
  decoder.finish();

  FrameStream stream;
  std::vector<std::int32_t> samples;
  std::vector<std::size_t> series_gaps;
  for (auto& acc : accepted) {
    if (acc.after_gap) {
      stream.gaps.push_back({stream.frames.size(), samples.size(), acc.missing_frames});
      series_gaps.push_back(samples.size());
    }
    samples.insert(samples.end(), acc.frame.samples.begin(), acc.frame.samples.end());
    stream.frames.push_back(std::move(acc.frame));
  }
  stream.warnings = decoder.warnings();
  return {SampleSeries(std::move(samples), rate, std::nullopt, std::move(series_gaps)), std::move(stream)};
}

}  // namespace qvarstep
