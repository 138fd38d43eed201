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

#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <map>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qvarstep/counter.hpp"
#include "qvarstep/dsp_filter.hpp"
#include "qvarstep/error.hpp"
#include "qvarstep/frames.hpp"
#include "qvarstep/manifest.hpp"
#include "qvarstep/signal_core.hpp"
#include "qvarstep/spectral.hpp"
#include "qvarstep/streaming.hpp"
#include "qvarstep/svg.hpp"
#include "qvarstep/synth.hpp"
#include "qvarstep/tuner_eval.hpp"

namespace qvarstep::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kDataError = 3, kInternal = 4 };

enum class Command { Synth, Count, Stream, Psd, Tune, Eval, Plot };

/// Parsed command line. Every field has the documented default.
struct RunConfig {
  Command command = Command::Count;
  std::string input;
  std::string output;
  std::string out_dir;
  std::string svg_out;
  std::string filter_out;
  std::string json_out;

  BandpassSpec spec;
  PeakParams params = kDefaultPeakParams;
  std::optional<int> truth;

  bool allow_gaps = false;
  bool causal = false;
  bool loo_vote = false;
  bool write_frames = false;

  std::uint64_t seed = 0;
  int subjects = 1;
  std::optional<double> duration_s;
  std::string preset = "clean";
  std::string device_name = "Qvar";
  std::size_t seg_len = 1024;
  double overlap = 0.5;
  double band_low = 0.5;
  double band_high = 2.5;
  double rate_hz = 240.0;
};

namespace detail {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void validate(const RunConfig& c) {
  try {
    c.spec.validate();
    c.params.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (c.truth && *c.truth <= 0) throw UsageError("--truth must be positive");
  if (c.subjects < 1) throw UsageError("--subjects must be >= 1");
  if (c.duration_s && !(*c.duration_s > 0.0)) throw UsageError("--duration must be positive");
  if (!(c.rate_hz > 0.0)) throw UsageError("--rate must be positive");
  if (!(c.band_low < c.band_high)) throw UsageError("--band-low must be below --band-high");
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  f << content;
  if (!f) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

inline void emit(const RunConfig& c, std::ostream& out, const std::string& content) {
  if (c.output.empty() || c.output == "-") {
    out << content;
  } else {
    write_file(c.output, content);
  }
}

inline CountOptions count_options(const RunConfig& c) {
  return {c.causal ? FilterMode::Causal : FilterMode::ZeroPhase, c.allow_gaps};
}

inline BandpassSpec spec_at(const RunConfig& c, double fs) {
  BandpassSpec s = c.spec;
  s.fs_hz = fs;
  s.validate();
  return s;
}

inline std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

// ---------------------------------------------------------------------------

inline int run_synth(const RunConfig& c, std::ostream& out) {
  if (c.out_dir.empty()) throw UsageError("synth needs --out-dir");
  std::filesystem::create_directories(c.out_dir);
  const std::filesystem::path dir(c.out_dir);
  const Preset preset = preset_from_string(c.preset);

  if (c.duration_s) {
    const SyntheticSignal sig = generate(make_preset(preset, Environment::ParkingLot, *c.duration_s, c.seed));
    std::ostringstream csv;
    write_csv(csv, sig.series);
    write_file((dir / "walk.csv").string(), csv.str());
    write_file((dir / "walk.truth.json").string(), to_json(sig.truth).dump(2) + "\n");
    if (c.write_frames) {
      const auto bytes = encode_frames(sig.series);
      write_file((dir / "walk.bin").string(), std::string(bytes.begin(), bytes.end()));
    }
    out << "walk.csv " << sig.series.size() << " samples, " << sig.truth.step_count() << " steps\n";
    return kOk;
  }

  const auto sessions = generate_dataset(c.subjects, preset_template(preset), c.seed);
  Json dataset;
  dataset["sessions"] = Json::array();
  for (const auto& s : sessions) {
    const std::string id = s.manifest.subject_id;
    std::ostringstream csv;
    write_csv(csv, s.series);
    write_file((dir / (id + ".csv")).string(), csv.str());
    write_file((dir / (id + ".manifest.json")).string(), to_json(s.manifest).dump(2) + "\n");
    write_file((dir / (id + ".truth.json")).string(), to_json(s.truth).dump(2) + "\n");
    if (c.write_frames) {
      const auto bytes = encode_frames(s.series);
      write_file((dir / (id + ".bin")).string(), std::string(bytes.begin(), bytes.end()));
    }
    Json entry = to_json(s.manifest);
    entry["signal"] = id + ".csv";
    dataset["sessions"].push_back(std::move(entry));
    out << id << ".csv " << s.series.size() << " samples, " << s.truth.step_count() << " steps\n";
  }
  write_file((dir / "dataset.json").string(), dataset.dump(2) + "\n");
  return kOk;
}

inline int run_count(const RunConfig& c, std::ostream& out) {
  const SampleSeries series = load_csv(c.input);
  const BandpassSpec spec = spec_at(c, series.sample_rate_hz());
  if (!c.filter_out.empty()) write_file(c.filter_out, cascade_to_text(design_butterworth_bandpass(spec)));
  const StepReport report = count_steps_batch(series, spec, c.params, c.truth, count_options(c));
  emit(c, out, to_json(report).dump(2) + "\n");
  return kOk;
}

// Reads whatever is available. For the process's standard input this uses
// read(2) so events are produced while the sender keeps the pipe open.
inline std::size_t read_some(std::istream& in, char* buf, std::size_t cap) {
  if (&in == &std::cin) {
    for (;;) {
      const ssize_t got = ::read(STDIN_FILENO, buf, cap);
      if (got >= 0) return static_cast<std::size_t>(got);
      if (errno != EINTR) throw Error(ErrorCode::IoError, "read from standard input failed");
    }
  }
  in.read(buf, static_cast<std::streamsize>(cap));
  return static_cast<std::size_t>(in.gcount());
}

inline int run_stream(const RunConfig& c, std::istream& in, std::ostream& out, std::ostream& err) {
  BandpassSpec spec = spec_at(c, c.rate_hz);
  FrameDecoder decoder;
  std::optional<StreamingCounter> counter(std::in_place, spec, c.params);
  std::size_t segment_offset = 0;  // absolute index of the counter's sample 0
  std::size_t received = 0;
  std::size_t warnings_seen = 0;

  const auto print = [&](const std::vector<StepEvent>& events) {
    for (const StepEvent& e : events) {
      const std::size_t abs = segment_offset + e.index;
      out << abs << ',' << fmt("%.6f", static_cast<double>(abs) / c.rate_hz) << '\n';
    }
    if (!events.empty()) out.flush();
  };
  const auto report_warnings = [&] {
    const auto& w = decoder.warnings();
    for (; warnings_seen < w.size(); ++warnings_seen) {
      err << "warning: " << code_name(w[warnings_seen].code) << ": byte " << w[warnings_seen].byte_offset << ": "
          << w[warnings_seen].detail << '\n';
    }
  };

  std::vector<char> buf(4096);
  std::vector<std::int32_t> samples;
  for (;;) {
    const std::size_t got = read_some(in, buf.data(), buf.size());
    if (got == 0) break;
    const auto frames = decoder.feed(std::span(reinterpret_cast<const std::uint8_t*>(buf.data()), got));
    report_warnings();
    for (const auto& acc : frames) {
      if (acc.after_gap) {
        // Filters assume uniform sampling: close the segment and start over.
        err << "warning: gap of " << acc.missing_frames << " frame(s) before sample " << received << '\n';
        print(counter->finalize());
        counter.emplace(spec, c.params);
        segment_offset = received;
      }
      samples.assign(acc.frame.samples.begin(), acc.frame.samples.end());
      received += samples.size();
      print(counter->push(samples));
    }
  }
  decoder.finish();
  report_warnings();
  print(counter->finalize());
  return kOk;
}

inline int run_psd(const RunConfig& c, std::ostream& out) {
  const SampleSeries series = load_csv(c.input);
  const auto x = as_real(series);
  const PsdEstimate est = welch_psd(x, series.sample_rate_hz(), c.seg_len, c.overlap);
  const double dominant = dominant_frequency(est, c.band_low, c.band_high);
  std::string text = "# dominant_frequency_hz " + fmt("%.6f", dominant) + "\n";
  text += "freq_hz,psd\n";
  char line[96];
  for (std::size_t k = 0; k < est.psd.size(); ++k) {
    std::snprintf(line, sizeof(line), "%.6f,%.9g\n", est.freqs_hz[k], est.psd[k]);
    text += line;
  }
  emit(c, out, text);
  if (!c.svg_out.empty()) {
    svg::Panel panel{"Power spectral density (dominant " + fmt("%.2f", dominant) + " Hz)", "Frequency (Hz)",
                     "PSD (counts^2/Hz)", {}, {}, true};
    panel.traces.push_back({est.freqs_hz, est.psd, "#1f77b4", 1.2, "Welch PSD"});
    svg::Markers peak;
    peak.x.push_back(dominant);
    const auto it = std::find(est.freqs_hz.begin(), est.freqs_hz.end(), dominant);
    peak.y.push_back(est.psd[static_cast<std::size_t>(it - est.freqs_hz.begin())]);
    peak.label = "dominant";
    panel.stars.push_back(std::move(peak));
    write_file(c.svg_out, svg::render(std::span(&panel, 1)));
  }
  return kOk;
}

inline Json condition_means_json(const EvalTable& table, const std::string& device) {
  Json arr = Json::array();
  const auto d = table.device_index(device);
  for (const auto& ct : table.conditions) {
    Json j;
    j["env"] = to_string(ct.condition.env);
    j["trolley"] = ct.condition.trolley;
    const auto m = d ? ct.mean_accuracy[*d] : std::nullopt;
    j["mean_accuracy"] = m ? Json(*m) : Json(nullptr);
    j["mean_accuracy_2dp"] = m ? Json(format_2dp(*m)) : Json(nullptr);
    arr.push_back(std::move(j));
  }
  return arr;
}

inline int run_tune(const RunConfig& c, std::ostream& out) {
  const auto sessions = load_dataset(c.input);
  const BandpassSpec spec = spec_at(c, kDefaultRateHz);
  const ParamGrid grid;
  const TuneResult tuned = tune_dataset(sessions, spec, grid, count_options(c));

  // Map (session, subsession) to its tuning entry.
  std::map<std::pair<std::string, std::size_t>, std::size_t> entry_of;
  for (std::size_t e = 0; e < tuned.per_session_best.size(); ++e) {
    entry_of[{tuned.per_session_best[e].subject_id, tuned.per_session_best[e].subsession}] = e;
  }
  const auto lookup = [&](std::size_t i, std::size_t k) { return entry_of.at({sessions[i].manifest.subject_id, k}); };

  EvalOptions options{c.device_name, spec, count_options(c)};
  const EvalTable voted = c.loo_vote
      ? evaluate_dataset(sessions, [&](std::size_t i, std::size_t k) { return tuned.loo_voted[lookup(i, k)]; }, options)
      : evaluate_dataset(sessions, tuned.voted, options);
  const EvalTable best = evaluate_dataset(
      sessions, [&](std::size_t i, std::size_t k) { return tuned.per_session_best[lookup(i, k)].search.best; }, options);

  Json doc;
  doc["per_session_best"] = Json::array();
  for (std::size_t e = 0; e < tuned.per_session_best.size(); ++e) {
    const TuneEntry& t = tuned.per_session_best[e];
    Json j;
    j["subject_id"] = t.subject_id;
    j["subsession"] = t.subsession;
    j["env"] = to_string(t.condition.env);
    j["trolley"] = t.condition.trolley;
    j["truth"] = t.truth;
    j["params"] = to_json(t.search.best);
    j["count"] = t.search.best_count;
    j["accuracy"] = t.search.best_accuracy;
    if (c.loo_vote) j["loo_voted_params"] = to_json(tuned.loo_voted[e]);
    doc["per_session_best"].push_back(std::move(j));
  }
  doc["voted_params"] = to_json(tuned.voted);
  doc["vote_mode"] = c.loo_vote ? "leave_one_out" : "all_sessions";
  doc["per_condition_means"] = condition_means_json(voted, c.device_name);
  doc["per_condition_means_session_best"] = condition_means_json(best, c.device_name);
  emit(c, out, doc.dump(2) + "\n");
  return kOk;
}

inline int run_eval(const RunConfig& c, std::ostream& out) {
  const auto sessions = load_dataset(c.input);
  const EvalOptions options{c.device_name, spec_at(c, kDefaultRateHz), count_options(c)};
  const EvalTable table = evaluate_dataset(sessions, c.params, options);
  if (!c.json_out.empty()) write_file(c.json_out, to_json(table).dump(2) + "\n");
  emit(c, out, render_table_text(table));
  return kOk;
}

inline int run_plot(const RunConfig& c, std::ostream& out) {
  const SampleSeries series = load_csv(c.input);
  const BandpassSpec spec = spec_at(c, series.sample_rate_hz());
  const CountOptions options = count_options(c);
  const FilteredSignal filtered = filter_signal(series, spec, options);
  const auto peaks = detect_steps(filtered, c.params);

  const double fs = series.sample_rate_hz();
  std::vector<double> t(series.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i) / fs;

  std::vector<svg::Panel> panels(2);
  panels[0] = {"Raw signal", "Time (s)", "Counts", {}, {}, false};
  panels[0].traces.push_back({t, as_real(series), "#7f7f7f", 1.0, "raw"});
  panels[1] = {"Filtered signal with detected steps (" + std::to_string(peaks.size()) + ")", "Time (s)", "Counts", {}, {}, false};
  panels[1].traces.push_back({t, filtered.values, "#1f77b4", 1.2, options.mode == FilterMode::ZeroPhase ? "zero-phase" : "causal"});
  svg::Markers stars;
  stars.label = "steps";
  for (const Peak& p : peaks) {
    stars.x.push_back(t[p.index]);
    stars.y.push_back(p.height);
  }
  panels[1].stars.push_back(std::move(stars));
  emit(c, out, svg::render(panels));
  return kOk;
}

}  // namespace detail

/// Runs one command. `args` excludes the program name. Errors print a single
/// line "<Code>: <message>" on `err`.
inline int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Step counting from body-area electrostatic signals", "qvarstep"};
  app.require_subcommand(1);

  auto add_filter = [&](CLI::App* s) {
    s->add_option("--low", c.spec.low_hz, "Lower band edge in Hz")->capture_default_str();
    s->add_option("--high", c.spec.high_hz, "Upper band edge in Hz")->capture_default_str();
    s->add_option("--order", c.spec.order, "Butterworth prototype order")->capture_default_str();
  };
  auto add_params = [&](CLI::App* s) {
    s->add_option("--prominence", c.params.prominence_min, "Minimum peak prominence (counts)")->capture_default_str();
    s->add_option("--distance", c.params.distance_min, "Minimum peak distance (samples)")->capture_default_str();
  };

  auto* synth = app.add_subcommand("synth", "Generate synthetic sessions with ground truth");
  synth->add_option("--out-dir", c.out_dir, "Output directory")->required();
  synth->add_option("--subjects", c.subjects, "Number of subjects")->capture_default_str();
  synth->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  synth->add_option("--preset", c.preset, "clean | noisy | weak")->capture_default_str();
  synth->add_option("--duration", c.duration_s, "Write one continuous walk of this many seconds instead of a dataset");
  synth->add_flag("--frames", c.write_frames, "Also write binary frame streams");

  auto* count = app.add_subcommand("count", "Count steps in a CSV recording");
  count->add_option("input", c.input, "CSV file (t,qvar)")->required();
  count->add_option("--truth", c.truth, "True step count, enables accuracy");
  count->add_option("-o,--out", c.output, "Report path (default: standard output)");
  count->add_option("--filter-out", c.filter_out, "Write the designed filter coefficients here");
  count->add_flag("--causal", c.causal, "Causal instead of zero-phase filtering");
  count->add_flag("--allow-gaps", c.allow_gaps, "Split at recorded gaps instead of failing");
  add_filter(count);
  add_params(count);

  auto* stream = app.add_subcommand("stream", "Count steps from binary frames on standard input");
  stream->add_option("--rate", c.rate_hz, "Sample rate in Hz")->capture_default_str();
  add_filter(stream);
  add_params(stream);

  auto* psd = app.add_subcommand("psd", "Welch power spectral density");
  psd->add_option("input", c.input, "CSV file (t,qvar)")->required();
  psd->add_option("-o,--out", c.output, "Output path (default: standard output)");
  psd->add_option("--svg", c.svg_out, "Also write an SVG line plot");
  psd->add_option("--seg-len", c.seg_len, "Segment length (power of two)")->capture_default_str();
  psd->add_option("--overlap", c.overlap, "Segment overlap fraction")->capture_default_str();
  psd->add_option("--band-low", c.band_low, "Dominant-frequency search band, low edge")->capture_default_str();
  psd->add_option("--band-high", c.band_high, "Dominant-frequency search band, high edge")->capture_default_str();

  auto* tune = app.add_subcommand("tune", "Grid-search peak parameters and vote");
  tune->add_option("dataset", c.input, "Dataset JSON")->required();
  tune->add_option("-o,--out", c.output, "Output path (default: standard output)");
  tune->add_flag("--causal", c.causal, "Causal instead of zero-phase filtering");
  tune->add_flag("--allow-gaps", c.allow_gaps, "Split at recorded gaps instead of failing");
  tune->add_flag("--loo-vote", c.loo_vote, "Evaluate each session with the vote of the other sessions");
  tune->add_option("--device-name", c.device_name, "Column name for the counted device")->capture_default_str();
  add_filter(tune);

  auto* eval = app.add_subcommand("eval", "Evaluate a dataset with fixed parameters");
  eval->add_option("dataset", c.input, "Dataset JSON")->required();
  eval->add_option("-o,--out", c.output, "Table path (default: standard output)");
  eval->add_option("--json", c.json_out, "Also write the table as JSON");
  eval->add_flag("--causal", c.causal, "Causal instead of zero-phase filtering");
  eval->add_flag("--allow-gaps", c.allow_gaps, "Split at recorded gaps instead of failing");
  eval->add_option("--device-name", c.device_name, "Column name for the counted device")->capture_default_str();
  add_filter(eval);
  add_params(eval);

  auto* plot = app.add_subcommand("plot", "SVG of raw signal, filtered signal and detected steps");
  plot->add_option("input", c.input, "CSV file (t,qvar)")->required();
  plot->add_option("-o,--out", c.output, "SVG path (default: standard output)");
  plot->add_flag("--causal", c.causal, "Causal instead of zero-phase filtering");
  plot->add_flag("--allow-gaps", c.allow_gaps, "Split at recorded gaps instead of failing");
  add_filter(plot);
  add_params(plot);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    for (auto* sub : app.get_subcommands()) {
      if (sub->get_help_ptr() && sub->get_help_ptr()->count() > 0) {
        out << sub->help();
        return kOk;
      }
    }
    err << "UsageError: " << e.what() << '\n';
    return kUsage;
  }

  const auto* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  c.command = name == "synth" ? Command::Synth
            : name == "count" ? Command::Count
            : name == "stream" ? Command::Stream
            : name == "psd" ? Command::Psd
            : name == "tune" ? Command::Tune
            : name == "eval" ? Command::Eval
                             : Command::Plot;

  try {
    detail::validate(c);
    switch (c.command) {
      case Command::Synth: return detail::run_synth(c, out);
      case Command::Count: return detail::run_count(c, out);
      case Command::Stream: return detail::run_stream(c, in, out, err);
      case Command::Psd: return detail::run_psd(c, out);
      case Command::Tune: return detail::run_tune(c, out);
      case Command::Eval: return detail::run_eval(c, out);
      case Command::Plot: return detail::run_plot(c, out);
    }
  } catch (const detail::UsageError& e) {
    err << "UsageError: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "IoError: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "InternalError: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}

}  // namespace qvarstep::cli
