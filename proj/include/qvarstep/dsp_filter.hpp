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
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qvarstep/error.hpp"
#include "qvarstep/signal_core.hpp"

namespace qvarstep {

struct BandpassSpec {
  double low_hz = 0.5;
  double high_hz = 2.5;
  int order = 5;  // lowpass prototype order; the bandpass has twice this order
  double fs_hz = 240.0;

  void validate() const {
    if (order < 1) throw Error(ErrorCode::InvalidSpec, "order must be >= 1");
    if (!(fs_hz > 0.0) || !std::isfinite(fs_hz)) throw Error(ErrorCode::InvalidSpec, "fs_hz must be positive");
    if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < fs_hz / 2.0)) {
      throw Error(ErrorCode::InvalidSpec, "need 0 < low_hz < high_hz < fs/2, got low=" + std::to_string(low_hz) +
                                              " high=" + std::to_string(high_hz) + " fs=" + std::to_string(fs_hz));
    }
  }

  friend bool operator==(const BandpassSpec&, const BandpassSpec&) = default;
};

/// Second-order section with a0 normalized to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  std::complex<double> response(std::complex<double> z_inv) const {
    const auto z2 = z_inv * z_inv;
    return (b0 + b1 * z_inv + b2 * z2) / (1.0 + a1 * z_inv + a2 * z2);
  }

  /// Roots of z^2 + a1 z + a2.
  std::array<std::complex<double>, 2> poles() const {
    const std::complex<double> disc = std::sqrt(std::complex<double>(a1 * a1 - 4.0 * a2, 0.0));
    return {(-a1 + disc) / 2.0, (-a1 - disc) / 2.0};
  }

  double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }

  friend bool operator==(const Biquad&, const Biquad&) = default;
};

/// Cascade of biquads in transposed direct form II. Carries per-section
/// state so that successive calls continue where the previous one stopped.
class BiquadCascade {
 public:
  using State = std::array<double, 2>;

  BiquadCascade() = default;
  BiquadCascade(std::vector<Biquad> sections, double fs_hz)
      : sections_(std::move(sections)), state_(sections_.size(), State{0.0, 0.0}), fs_hz_(fs_hz) {
    if (!(fs_hz_ > 0.0)) throw Error(ErrorCode::InvalidSpec, "fs_hz must be positive");
  }

  std::span<const Biquad> sections() const noexcept { return sections_; }
  std::span<const State> state() const noexcept { return state_; }
  double fs_hz() const noexcept { return fs_hz_; }

  void reset() noexcept { std::fill(state_.begin(), state_.end(), State{0.0, 0.0}); }

  /// Steady-state registers for a constant input of value `level`.
  void set_steady_state(double level) {
    double in = level;
    for (std::size_t i = 0; i < sections_.size(); ++i) {
      const Biquad& s = sections_[i];
      const double out = s.dc_gain() * in;
      state_[i] = {out - s.b0 * in, s.b2 * in - s.a2 * out};
      in = out;
    }
  }

  double process(double x) noexcept {
    for (std::size_t i = 0; i < sections_.size(); ++i) {
      const Biquad& s = sections_[i];
      State& st = state_[i];
      const double y = s.b0 * x + st[0];
      st[0] = s.b1 * x - s.a1 * y + st[1];
      st[1] = s.b2 * x - s.a2 * y;
      x = y;
    }
    return x;
  }

  std::vector<std::complex<double>> poles() const {
    std::vector<std::complex<double>> out;
    for (const auto& s : sections_) {
      const auto p = s.poles();
      out.insert(out.end(), p.begin(), p.end());
    }
    return out;
  }

 private:
  std::vector<Biquad> sections_;
  std::vector<State> state_;
  double fs_hz_ = 240.0;
};

/// Butterworth bandpass: analog lowpass prototype, lowpass-to-bandpass
/// transform, then bilinear transform with both band edges prewarped so the
/// digital response is exactly 1/sqrt(2) at `low_hz` and `high_hz`.
/// Sections are ordered by ascending pole radius.
inline BiquadCascade design_butterworth_bandpass(const BandpassSpec& spec) {
  spec.validate();
  using cd = std::complex<double>;
  const double pi = std::numbers::pi;
  const int n = spec.order;
  const double fs2 = 2.0 * spec.fs_hz;
  const double w_low = fs2 * std::tan(pi * spec.low_hz / spec.fs_hz);
  const double w_high = fs2 * std::tan(pi * spec.high_hz / spec.fs_hz);
  const double bw = w_high - w_low;
  const double w0_sq = w_low * w_high;

  std::vector<cd> analog;
  analog.reserve(2 * static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const cd proto = std::polar(1.0, pi * (2.0 * k + n + 1.0) / (2.0 * n));
    const cd half = proto * (bw / 2.0);
    const cd root = std::sqrt(half * half - w0_sq);
    analog.push_back(half + root);
    analog.push_back(half - root);
  }

  // Bilinear map: n zeros at s = 0 land on z = 1, the n zeros at infinity on z = -1.
  cd gain = std::pow(bw * fs2, n);
  std::vector<cd> digital;
  digital.reserve(analog.size());
  for (const cd& p : analog) {
    gain /= (fs2 - p);
    digital.push_back((fs2 + p) / (fs2 - p));
  }

  // Pair conjugates; leftover real poles pair with each other.
  std::vector<std::pair<cd, cd>> pairs;
  std::vector<double> reals;
  for (const cd& p : digital) {
    const double tol = 1e-10 * std::max(1.0, std::abs(p));
    if (std::abs(p.imag()) <= tol) {
      reals.push_back(p.real());
    } else if (p.imag() > 0.0) {
      pairs.emplace_back(p, std::conj(p));
    }
  }
  std::sort(reals.begin(), reals.end());
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) pairs.emplace_back(cd(reals[i]), cd(reals[i + 1]));
  if (pairs.size() != static_cast<std::size_t>(n)) {
    throw Error(ErrorCode::InvalidSpec, "pole pairing failed; design is numerically degenerate");
  }
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    return std::max(std::abs(a.first), std::abs(a.second)) < std::max(std::abs(b.first), std::abs(b.second));
  });

  const double k = gain.real();
  const double per_section = std::pow(std::abs(k), 1.0 / n);
  std::vector<Biquad> sections;
  sections.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [p1, p2] = pairs[i];
    const double g = (i == 0 && k < 0.0) ? -per_section : per_section;
    sections.push_back(Biquad{g, 0.0, -g, -(p1 + p2).real(), (p1 * p2).real()});
  }
  return BiquadCascade(std::move(sections), spec.fs_hz);
}

struct FrequencyResponse {
  double magnitude = 0.0;
  double phase = 0.0;  // radians
};

inline FrequencyResponse frequency_response(const BiquadCascade& cascade, double f_hz) {
  if (f_hz < 0.0 || f_hz > cascade.fs_hz() / 2.0) {
    throw Error(ErrorCode::InvalidArgument, "frequency outside [0, fs/2]");
  }
  const std::complex<double> z_inv = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / cascade.fs_hz());
  std::complex<double> h(1.0, 0.0);
  for (const auto& s : cascade.sections()) h *= s.response(z_inv);
  return {std::abs(h), std::arg(h)};
}

/// Causal filtering. State persists in `cascade`, so a signal split into
/// chunks produces the same output as the whole signal.
inline std::vector<double> filter_forward(BiquadCascade& cascade, std::span<const double> x) {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = cascade.process(x[i]);
  return y;
}

inline std::vector<double> filter_forward(BiquadCascade& cascade, const SampleSeries& series) {
  const auto x = as_real(series);
  return filter_forward(cascade, x);
}

/// Padding used by the zero-phase filter: 3 s at the cascade's rate.
inline std::size_t zero_phase_pad(const BiquadCascade& cascade) {
  return static_cast<std::size_t>(std::llround(3.0 * cascade.fs_hz()));
}

/// Forward-backward filtering with odd-reflection padding and steady-state
/// initial conditions. `cascade` is not modified. Net phase is zero and the
/// effective magnitude is |H|^2.
inline std::vector<double> filter_zero_phase(const BiquadCascade& cascade, std::span<const double> x) {
  const std::size_t pad = zero_phase_pad(cascade);
  if (x.size() <= pad) {
    throw Error(ErrorCode::SeriesTooShort, "zero-phase filtering needs more than " + std::to_string(pad) +
                                               " samples, got " + std::to_string(x.size()));
  }
  const std::size_t n = x.size();
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  BiquadCascade work = cascade;
  work.set_steady_state(ext.front());
  for (double& v : ext) v = work.process(v);
  std::reverse(ext.begin(), ext.end());
  work.set_steady_state(ext.front());
  for (double& v : ext) v = work.process(v);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

inline std::vector<double> filter_zero_phase(const BiquadCascade& cascade, const SampleSeries& series) {
  const auto x = as_real(series);
  return filter_zero_phase(cascade, x);
}

// Coefficient exchange format:
//   {"fs_hz": 240, "sections": [[b0, b1, b2, a1, a2], ...]}
// Numbers are written with 17 significant digits.

inline std::string cascade_to_text(const BiquadCascade& cascade) {
  char buf[512];
  std::string out = "{\n";
  std::snprintf(buf, sizeof(buf), "  \"fs_hz\": %.17g,\n  \"sections\": [\n", cascade.fs_hz());
  out += buf;
  const auto sections = cascade.sections();
  for (std::size_t i = 0; i < sections.size(); ++i) {
    const Biquad& s = sections[i];
    std::snprintf(buf, sizeof(buf), "    [%.17g, %.17g, %.17g, %.17g, %.17g]%s\n", s.b0, s.b1, s.b2, s.a1, s.a2,
                  i + 1 < sections.size() ? "," : "");
    out += buf;
  }
  out += "  ]\n}\n";
  return out;
}

inline BiquadCascade cascade_from_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidSpec, e.what());
  }
  if (!j.contains("fs_hz") || !j.contains("sections") || !j["sections"].is_array()) {
    throw Error(ErrorCode::InvalidSpec, "expected fields 'fs_hz' and 'sections'");
  }
  std::vector<Biquad> sections;
  for (const auto& row : j["sections"]) {
    if (!row.is_array() || row.size() != 5) throw Error(ErrorCode::InvalidSpec, "section must have 5 coefficients");
    sections.push_back(Biquad{row[0].get<double>(), row[1].get<double>(), row[2].get<double>(),
                              row[3].get<double>(), row[4].get<double>()});
  }
  return BiquadCascade(std::move(sections), j["fs_hz"].get<double>());
}

}  // namespace qvarstep
