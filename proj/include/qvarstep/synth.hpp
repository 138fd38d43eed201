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
#include <cstdio>
#include <functional>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "qvarstep/error.hpp"
#include "qvarstep/manifest.hpp"
#include "qvarstep/signal_core.hpp"

namespace qvarstep {

enum class DriftKind { None, Sinusoid, RandomWalk };

struct Drift {
  DriftKind kind = DriftKind::None;
  double freq_hz = 0.0;      // Sinusoid; must be <= 0.1 Hz
  double amplitude = 0.0;    // Sinusoid
  double sd_per_sample = 0.0;  // RandomWalk
};

/// One walking stretch followed by a rest.
struct Bout {
  double walk_s = 0.0;
  double rest_s = 0.0;
};

/// A transient that is not a step (an arm gesture, a touch): same pulse shape,
/// absent from the ground truth.
struct Distractor {
  double time_s = 0.0;
  double amplitude = 0.0;
};

struct GaitScenario {
  double duration_s = 120.0;
  double step_freq_mean_hz = 1.98;
  double step_freq_sd_hz = 0.13;
  Environment env = Environment::ParkingLot;
  double step_amplitude_counts = 400.0;
  double noise_sd_counts = 0.0;
  Drift drift;
  double hum_50hz_amplitude = 0.0;
  std::vector<Bout> bouts;  // empty: one continuous walk over duration_s
  std::vector<Distractor> distractors;
  double pulse_width_s = 0.15;  // peak-to-trough separation of the biphasic pulse
  std::uint64_t seed = 0;

  void validate() const {
    auto bad = [](const std::string& why) { return Error(ErrorCode::InvalidScenario, why); };
    if (!(duration_s > 0.0) || !std::isfinite(duration_s)) throw bad("duration_s must be positive");
    if (!(step_freq_sd_hz >= 0.0)) throw bad("step_freq_sd_hz must be >= 0");
    if (!(step_freq_mean_hz > 0.5 && step_freq_mean_hz < 2.5)) throw bad("step_freq_mean_hz must lie in (0.5, 2.5)");
    if (!(step_amplitude_counts > 0.0)) throw bad("step_amplitude_counts must be positive");
    if (!(noise_sd_counts >= 0.0) || !(hum_50hz_amplitude >= 0.0)) throw bad("noise and hum must be >= 0");
    if (!(pulse_width_s > 0.0)) throw bad("pulse_width_s must be positive");
    if (drift.kind == DriftKind::Sinusoid && !(drift.freq_hz > 0.0 && drift.freq_hz <= 0.1)) {
      throw bad("sinusoidal drift frequency must be in (0, 0.1] Hz");
    }
    if (drift.kind == DriftKind::RandomWalk && !(drift.sd_per_sample >= 0.0)) throw bad("random-walk sd must be >= 0");
    if (!bouts.empty()) {
      double total = 0.0;
      for (const Bout& b : bouts) {
        if (!(b.walk_s > 0.0) || !(b.rest_s >= 0.0)) throw bad("bouts need walk_s > 0 and rest_s >= 0");
        total += b.walk_s + b.rest_s;
      }
      if (std::abs(total - duration_s) > 1e-6) throw bad("bout lengths do not add up to duration_s");
    }
  }
};

struct GroundTruth {
  std::vector<double> step_times_s;
  std::vector<std::pair<double, double>> walk_segments_s;  // [begin, end) of each walking stretch

  std::size_t step_count() const noexcept { return step_times_s.size(); }
};

struct SyntheticSignal {
  SampleSeries series;
  GroundTruth truth;
  double realized_step_freq_hz = 0.0;  // (steps - 1) / (last - first) over continuous walking
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) { return splitmix64(seed ^ splitmix64(stream)); }

inline void add_pulse(std::vector<double>& acc, double fs, double center_s, double amplitude, double width_s) {
  const double sigma = width_s / 2.0;
  const double lo = (center_s - 5.0 * sigma) * fs;
  const double hi = (center_s + 5.0 * sigma) * fs;
  const auto first = static_cast<std::ptrdiff_t>(std::max(0.0, std::ceil(lo)));
  const auto last = std::min(static_cast<std::ptrdiff_t>(acc.size()) - 1, static_cast<std::ptrdiff_t>(std::floor(hi)));
  for (std::ptrdiff_t i = first; i <= last; ++i) {
    const double u = (static_cast<double>(i) / fs - center_s) / sigma;
    acc[static_cast<std::size_t>(i)] += -amplitude * u * std::exp(0.5 - 0.5 * u * u);
  }
}

}  // namespace detail

/// Baseline drift + one biphasic Gaussian-derivative pulse per step + white
/// noise + optional mains hum, sampled at 240 Hz and rounded to integer
/// counts. Step intervals are 1/f with f drawn from a normal distribution
/// truncated to (0.5, 2.5) Hz. The first step of each walking stretch falls
/// half an interval after its start.
inline SyntheticSignal generate(const GaitScenario& scenario) {
  scenario.validate();
  constexpr double fs = static_cast<double>(kDefaultRateHz);
  const auto n = static_cast<std::size_t>(std::llround(scenario.duration_s * fs));

  std::mt19937_64 cadence_rng(detail::derive_seed(scenario.seed, 1));
  std::mt19937_64 noise_rng(detail::derive_seed(scenario.seed, 2));
  std::mt19937_64 drift_rng(detail::derive_seed(scenario.seed, 3));
  std::normal_distribution<double> cadence(scenario.step_freq_mean_hz, scenario.step_freq_sd_hz);
  auto next_interval = [&]() {
    if (scenario.step_freq_sd_hz == 0.0) return 1.0 / scenario.step_freq_mean_hz;
    double f = cadence(cadence_rng);
    while (!(f > 0.5 && f < 2.5)) f = cadence(cadence_rng);
    return 1.0 / f;
  };

  std::vector<Bout> bouts = scenario.bouts;
  if (bouts.empty()) bouts.push_back({scenario.duration_s, 0.0});

  SyntheticSignal out;
  double t0 = 0.0;
  for (const Bout& b : bouts) {
    const double end = t0 + b.walk_s;
    out.truth.walk_segments_s.emplace_back(t0, end);
    double t = t0 + 0.5 * next_interval();
    while (t < end) {
      out.truth.step_times_s.push_back(t);
      t += next_interval();
    }
    t0 = end + b.rest_s;
  }
  const auto& steps = out.truth.step_times_s;
  if (steps.size() >= 2 && scenario.bouts.size() <= 1) {
    out.realized_step_freq_hz = static_cast<double>(steps.size() - 1) / (steps.back() - steps.front());
  }

  std::vector<double> acc(n, 0.0);
  for (double ts : steps) detail::add_pulse(acc, fs, ts, scenario.step_amplitude_counts, scenario.pulse_width_s);
  for (const Distractor& d : scenario.distractors) detail::add_pulse(acc, fs, d.time_s, d.amplitude, scenario.pulse_width_s);

  std::normal_distribution<double> noise(0.0, 1.0);
  double walk = 0.0;
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    switch (scenario.drift.kind) {
      case DriftKind::None:
        break;
      case DriftKind::Sinusoid:
        acc[i] += scenario.drift.amplitude * std::sin(two_pi * scenario.drift.freq_hz * t);
        break;
      case DriftKind::RandomWalk:
        walk += scenario.drift.sd_per_sample * noise(drift_rng);
        acc[i] += walk;
        break;
    }
    if (scenario.hum_50hz_amplitude > 0.0) acc[i] += scenario.hum_50hz_amplitude * std::sin(two_pi * 50.0 * t);
    if (scenario.noise_sd_counts > 0.0) acc[i] += scenario.noise_sd_counts * noise(noise_rng);
  }

  std::vector<std::int32_t> counts(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double clamped = std::clamp(acc[i], -static_cast<double>(kMaxAbsCount), static_cast<double>(kMaxAbsCount));
    counts[i] = static_cast<std::int32_t>(std::llround(clamped));
  }
  out.series = SampleSeries(std::move(counts));
  return out;
}

enum class Preset { Clean, Noisy, Weak };

inline std::string to_string(Preset p) {
  switch (p) {
    case Preset::Clean: return "clean";
    case Preset::Noisy: return "noisy";
    case Preset::Weak: return "weak";
  }
  return "clean";
}

inline Preset preset_from_string(const std::string& s) {
  if (s == "clean") return Preset::Clean;
  if (s == "noisy") return Preset::Noisy;
  if (s == "weak") return Preset::Weak;
  throw Error(ErrorCode::InvalidScenario, "unknown preset '" + s + "' (clean|noisy|weak)");
}

inline double default_step_amplitude(Environment env) { return env == Environment::ParkingLot ? 400.0 : 1500.0; }

/// Continuous-walk scenario for a preset. Clean: light noise and slow
/// baseline wander. Noisy: white noise at half the step amplitude plus hum.
/// Weak: a low-amplitude step wave, as on a wide open floor.
inline GaitScenario make_preset(Preset preset, Environment env, double duration_s, std::uint64_t seed) {
  GaitScenario s;
  s.duration_s = duration_s;
  s.env = env;
  s.seed = seed;
  s.step_amplitude_counts = default_step_amplitude(env);
  const double a = s.step_amplitude_counts;
  switch (preset) {
    case Preset::Clean:
      s.noise_sd_counts = 0.05 * a;
      s.drift = {DriftKind::Sinusoid, 0.03, 1.5 * a, 0.0};
      break;
    case Preset::Noisy:
      s.noise_sd_counts = 0.5 * a;
      s.drift = {DriftKind::Sinusoid, 0.05, 3.0 * a, 0.0};
      s.hum_50hz_amplitude = 0.3 * a;
      break;
    case Preset::Weak:
      s.step_amplitude_counts = 150.0;
      s.noise_sd_counts = 0.3 * s.step_amplitude_counts;
      s.drift = {DriftKind::RandomWalk, 0.0, 0.0, 0.5};
      break;
  }
  return s;
}

struct SyntheticSession {
  SessionManifest manifest;
  SampleSeries series;
  GroundTruth truth;
};

/// The four recorded conditions in table order.
struct Condition {
  Environment env = Environment::ParkingLot;
  bool trolley = false;

  friend auto operator<=>(const Condition&, const Condition&) = default;
};

inline constexpr std::array<Condition, 4> kConditions{{{Environment::ParkingLot, false},
                                                        {Environment::ParkingLot, true},
                                                        {Environment::ShoppingCenter, true},
                                                        {Environment::ShoppingCenter, false}}};

/// Per-condition scenario factory: (condition, duration_s, seed) -> scenario.
using ScenarioTemplate = std::function<GaitScenario(const Condition&, double, std::uint64_t)>;

inline ScenarioTemplate preset_template(Preset preset) {
  return [preset](const Condition& c, double duration_s, std::uint64_t seed) {
    return make_preset(preset, c.env, duration_s, seed);
  };
}

/// `n_subjects` sessions of four concatenated subsessions (100-125 s each),
/// one per condition. Trolley only changes metadata. Seeds for every
/// subject and subsession derive from `seed`.
inline std::vector<SyntheticSession> generate_dataset(int n_subjects, const ScenarioTemplate& scenario_for,
                                                      std::uint64_t seed) {
  if (n_subjects < 1) throw Error(ErrorCode::InvalidScenario, "n_subjects must be >= 1");
  std::vector<SyntheticSession> out;
  for (int subject = 0; subject < n_subjects; ++subject) {
    const std::uint64_t subject_seed = detail::derive_seed(seed, 1000 + static_cast<std::uint64_t>(subject));
    std::mt19937_64 rng(subject_seed);
    std::uniform_real_distribution<double> duration(100.0, 125.0);

    SyntheticSession session;
    char id[16];
    std::snprintf(id, sizeof(id), "S%02d", subject + 1);
    session.manifest.subject_id = id;
    std::vector<std::int32_t> samples;
    for (std::size_t c = 0; c < kConditions.size(); ++c) {
      const double dur = std::round(duration(rng) * 4.0) / 4.0;
      GaitScenario scenario = scenario_for(kConditions[c], dur, detail::derive_seed(subject_seed, c));
      scenario.env = kConditions[c].env;
      SyntheticSignal sig = generate(scenario);
      const std::size_t offset = samples.size();
      const double offset_s = static_cast<double>(offset) / static_cast<double>(kDefaultRateHz);
      samples.insert(samples.end(), sig.series.samples().begin(), sig.series.samples().end());

      Subsession sub;
      sub.env = kConditions[c].env;
      sub.trolley = kConditions[c].trolley;
      sub.start_index = offset;
      sub.end_index = samples.size();
      sub.truth_steps = static_cast<int>(sig.truth.step_count());
      session.manifest.subsessions.push_back(sub);
      for (double t : sig.truth.step_times_s) session.truth.step_times_s.push_back(t + offset_s);
      for (auto [b, e] : sig.truth.walk_segments_s) session.truth.walk_segments_s.emplace_back(b + offset_s, e + offset_s);
    }
    session.series = SampleSeries(std::move(samples));
    out.push_back(std::move(session));
  }
  return out;
}

inline nlohmann::ordered_json to_json(const GroundTruth& truth) {
  nlohmann::ordered_json j;
  j["step_count"] = truth.step_count();
  j["step_times_s"] = truth.step_times_s;
  return j;
}

}  // namespace qvarstep
