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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qvarstep/accuracy.hpp"
#include "qvarstep/counter.hpp"
#include "qvarstep/error.hpp"
#include "qvarstep/manifest.hpp"
#include "qvarstep/parallel.hpp"
#include "qvarstep/peak_detect.hpp"
#include "qvarstep/synth.hpp"

namespace qvarstep {

struct ParamGrid {
  std::vector<double> prominences{200, 250, 300, 350, 400, 450, 500};
  std::vector<int> distances{50, 100, 150, 200};

  void validate() const {
    if (prominences.empty() || distances.empty()) throw Error(ErrorCode::InvalidArgument, "parameter grid is empty");
    if (std::adjacent_find(prominences.begin(), prominences.end(), std::greater_equal<>()) != prominences.end() ||
        std::adjacent_find(distances.begin(), distances.end(), std::greater_equal<>()) != distances.end()) {
      throw Error(ErrorCode::InvalidArgument, "grid axes must be strictly ascending");
    }
  }

  std::size_t size() const noexcept { return prominences.size() * distances.size(); }

  /// Cells in prominence-major order.
  std::vector<PeakParams> cells() const {
    std::vector<PeakParams> out;
    out.reserve(size());
    for (double p : prominences) {
      for (int d : distances) out.push_back({p, d});
    }
    return out;
  }
};

struct CellResult {
  PeakParams params;
  long count = 0;
  double accuracy = 0.0;
};

struct GridSearchResult {
  PeakParams best;
  double best_accuracy = 0.0;
  long best_count = 0;
  std::vector<CellResult> cells;  // in ParamGrid::cells() order
};

/// Exhaustive search; `count_for(params)` is called exactly once per cell.
/// The best cell has the highest accuracy; ties go to the smaller
/// prominence, then the smaller distance.
template <typename CountFn>
GridSearchResult grid_search(const ParamGrid& grid, int truth, CountFn&& count_for) {
  grid.validate();
  if (truth <= 0) throw Error(ErrorCode::ZeroTruth, "grid search needs a positive truth");
  GridSearchResult result;
  std::optional<std::size_t> best;
  for (const PeakParams& params : grid.cells()) {
    const long count = static_cast<long>(count_for(params));
    result.cells.push_back({params, count, accuracy(count, truth)});
    const auto err = [&](std::size_t i) { return std::labs(result.cells[i].count - truth); };
    const std::size_t i = result.cells.size() - 1;
    // Cells arrive in ascending (prominence, distance) order, so a strict
    // improvement is required to replace the incumbent.
    if (!best || err(i) < err(*best)) best = i;
  }
  result.best = result.cells[*best].params;
  result.best_accuracy = result.cells[*best].accuracy;
  result.best_count = result.cells[*best].count;
  return result;
}

/// Filters the series once, then counts peaks for every grid cell.
inline GridSearchResult grid_search_session(const SampleSeries& series, int truth, const BandpassSpec& spec,
                                            const ParamGrid& grid = {}, const CountOptions& options = {}) {
  if (truth <= 0) throw Error(ErrorCode::ZeroTruth, "grid search needs a positive truth");
  const FilteredSignal filtered = filter_signal(series, spec, options);
  return grid_search(grid, truth, [&](const PeakParams& p) { return detect_steps(filtered, p).size(); });
}

/// Most frequent parameter pair; ties go to the smaller prominence, then the
/// smaller distance.
inline PeakParams majority_vote(std::span<const PeakParams> per_session_best) {
  if (per_session_best.empty()) throw Error(ErrorCode::EmptyInput, "majority vote over an empty list");
  std::map<PeakParams, std::size_t> tally;
  for (const PeakParams& p : per_session_best) ++tally[p];
  auto best = tally.begin();
  for (auto it = tally.begin(); it != tally.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

/// For each entry, the vote over all other entries (its own best when it is
/// the only one).
inline std::vector<PeakParams> leave_one_out_votes(std::span<const PeakParams> per_session_best) {
  if (per_session_best.empty()) throw Error(ErrorCode::EmptyInput, "majority vote over an empty list");
  if (per_session_best.size() == 1) return {per_session_best[0]};
  std::vector<PeakParams> out;
  std::vector<PeakParams> others;
  for (std::size_t i = 0; i < per_session_best.size(); ++i) {
    others.clear();
    for (std::size_t j = 0; j < per_session_best.size(); ++j) {
      if (j != i) others.push_back(per_session_best[j]);
    }
    out.push_back(majority_vote(others));
  }
  return out;
}

/// Mean over the entries that are present; empty when none are.
inline std::optional<double> mean_accuracy(std::span<const std::optional<double>> values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Datasets and evaluation tables
// ---------------------------------------------------------------------------

/// A recorded session: its manifest and, when available, the signal.
/// Sessions without a signal contribute only their reference counts.
struct DatasetSession {
  SessionManifest manifest;
  std::optional<SampleSeries> series;
};

struct EvalRow {
  std::string subject_id;
  int truth = 0;
  std::vector<std::optional<int>> counts;  // aligned with EvalTable::devices

  std::optional<double> accuracy_of(std::size_t device) const {
    if (!counts[device]) return std::nullopt;
    return accuracy(*counts[device], truth);
  }
};

struct ConditionTable {
  Condition condition;
  std::vector<EvalRow> rows;
  std::vector<std::optional<double>> mean_accuracy;  // aligned with devices
};

struct EvalTable {
  std::vector<std::string> devices;
  std::vector<ConditionTable> conditions;

  std::optional<std::size_t> device_index(const std::string& name) const {
    const auto it = std::find(devices.begin(), devices.end(), name);
    if (it == devices.end()) return std::nullopt;
    return static_cast<std::size_t>(it - devices.begin());
  }
};

namespace detail {

// Numeric ids compare numerically, everything else lexicographically.
inline bool subject_less(const std::string& a, const std::string& b) {
  const auto digits = [](const std::string& s) {
    return !s.empty() && s.size() < 18 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (digits(a) && digits(b)) return std::stoll(a) < std::stoll(b);
  return a < b;
}

}  // namespace detail

/// Per-device table in condition order, rows sorted by subject id, means
/// over the non-missing entries.
inline EvalTable build_eval_table(std::vector<std::string> devices,
                                  std::vector<std::pair<Condition, EvalRow>> rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return detail::subject_less(a.second.subject_id, b.second.subject_id); });
  EvalTable table;
  table.devices = std::move(devices);
  for (const Condition& c : kConditions) {
    ConditionTable ct;
    ct.condition = c;
    for (auto& [cond, row] : rows) {
      if (cond == c) ct.rows.push_back(row);
    }
    if (ct.rows.empty()) continue;
    for (std::size_t d = 0; d < table.devices.size(); ++d) {
      std::vector<std::optional<double>> acc;
      for (const EvalRow& r : ct.rows) acc.push_back(r.accuracy_of(d));
      ct.mean_accuracy.push_back(mean_accuracy(acc));
    }
    table.conditions.push_back(std::move(ct));
  }
  return table;
}

struct EvalOptions {
  std::string device_name = "Qvar";
  BandpassSpec spec;
  CountOptions count;
};

/// Parameters to apply to subsession `sub` of session `session`.
using ParamsFor = std::function<PeakParams(std::size_t session, std::size_t sub)>;

/// Counts every subsession that has a signal with the given parameters,
/// adds reference counts from the manifests, and aggregates per condition.
inline EvalTable evaluate_dataset(std::span<const DatasetSession> sessions, const ParamsFor& params_for,
                                  const EvalOptions& options = {}) {
  std::vector<std::string> devices;
  const auto add_device = [&](const std::string& name) {
    if (std::find(devices.begin(), devices.end(), name) == devices.end()) devices.push_back(name);
  };
  bool any_signal = false;
  for (const auto& s : sessions) {
    if (s.series) any_signal = true;
    for (const auto& sub : s.manifest.subsessions) {
      if (sub.truth_steps <= 0) {
        throw Error(ErrorCode::ZeroTruth, "subject " + s.manifest.subject_id + " has a subsession without truth");
      }
      for (const auto& rc : sub.reference_counts) add_device(rc.device);
    }
  }
  if (any_signal) add_device(options.device_name);

  const auto measured = parallel_map(sessions.size(), [&](std::size_t i) {
    std::vector<std::optional<int>> counts;
    const DatasetSession& s = sessions[i];
    if (!s.series) {
      counts.resize(s.manifest.subsessions.size());
      return counts;
    }
    const auto slices = slice_sessions(*s.series, s.manifest);
    for (std::size_t k = 0; k < slices.size(); ++k) {
      const StepReport r = count_steps_batch(slices[k].second, options.spec, params_for(i, k), std::nullopt, options.count);
      counts.push_back(static_cast<int>(r.count()));
    }
    return counts;
  });

  std::vector<std::pair<Condition, EvalRow>> rows;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const auto& m = sessions[i].manifest;
    for (std::size_t k = 0; k < m.subsessions.size(); ++k) {
      const Subsession& sub = m.subsessions[k];
      EvalRow row{m.subject_id, sub.truth_steps, std::vector<std::optional<int>>(devices.size())};
      for (const auto& rc : sub.reference_counts) {
        const auto it = std::find(devices.begin(), devices.end(), rc.device);
        row.counts[static_cast<std::size_t>(it - devices.begin())] = rc.count;
      }
      if (sessions[i].series) {
        const auto it = std::find(devices.begin(), devices.end(), options.device_name);
        row.counts[static_cast<std::size_t>(it - devices.begin())] = measured[i][k];
      }
      rows.emplace_back(Condition{sub.env, sub.trolley}, std::move(row));
    }
  }
  return build_eval_table(std::move(devices), std::move(rows));
}

inline EvalTable evaluate_dataset(std::span<const DatasetSession> sessions, const PeakParams& params,
                                  const EvalOptions& options = {}) {
  return evaluate_dataset(sessions, [&](std::size_t, std::size_t) { return params; }, options);
}

/// Grid search on every subsession that has a signal.
struct TuneEntry {
  std::string subject_id;
  std::size_t subsession = 0;
  Condition condition;
  int truth = 0;
  GridSearchResult search;
};

struct TuneResult {
  std::vector<TuneEntry> per_session_best;
  PeakParams voted;
  std::vector<PeakParams> loo_voted;  // parallel to per_session_best
};

inline TuneResult tune_dataset(std::span<const DatasetSession> sessions, const BandpassSpec& spec,
                               const ParamGrid& grid = {}, const CountOptions& options = {}) {
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    if (!sessions[i].series) continue;
    validate(sessions[i].manifest, sessions[i].series->size());
    for (std::size_t k = 0; k < sessions[i].manifest.subsessions.size(); ++k) jobs.emplace_back(i, k);
  }
  if (jobs.empty()) throw Error(ErrorCode::EmptyInput, "no session with a signal to tune on");
  TuneResult result;
  result.per_session_best = parallel_map(jobs.size(), [&](std::size_t j) {
    const auto [i, k] = jobs[j];
    const DatasetSession& s = sessions[i];
    const Subsession& sub = s.manifest.subsessions[k];
    const SampleSeries slice = s.series->slice(sub.start_index, sub.end_index);
    return TuneEntry{s.manifest.subject_id, k, {sub.env, sub.trolley}, sub.truth_steps,
                     grid_search_session(slice, sub.truth_steps, spec, grid, options)};
  });
  std::vector<PeakParams> bests;
  for (const auto& e : result.per_session_best) bests.push_back(e.search.best);
  result.voted = majority_vote(bests);
  result.loo_voted = leave_one_out_votes(bests);
  return result;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline std::string condition_title(const Condition& c) {
  std::string out = c.env == Environment::ParkingLot ? "In parking lot" : "In shopping center";
  out += c.trolley ? " with shopping trolley" : " without shopping trolley";
  return out;
}

inline nlohmann::ordered_json to_json(const EvalTable& table) {
  using J = nlohmann::ordered_json;
  const auto opt = [](const std::optional<double>& v) { return v ? J(*v) : J(nullptr); };
  const auto opt2 = [](const std::optional<double>& v) { return v ? J(format_2dp(*v)) : J(nullptr); };
  J j;
  j["devices"] = table.devices;
  j["conditions"] = J::array();
  for (const auto& ct : table.conditions) {
    J c;
    c["env"] = to_string(ct.condition.env);
    c["trolley"] = ct.condition.trolley;
    c["rows"] = J::array();
    for (const auto& r : ct.rows) {
      J row;
      row["subject_id"] = r.subject_id;
      row["truth"] = r.truth;
      J counts = J::object();
      J acc = J::object();
      for (std::size_t d = 0; d < table.devices.size(); ++d) {
        counts[table.devices[d]] = r.counts[d] ? J(*r.counts[d]) : J(nullptr);
        acc[table.devices[d]] = opt(r.accuracy_of(d));
      }
      row["counts"] = std::move(counts);
      row["accuracy"] = std::move(acc);
      c["rows"].push_back(std::move(row));
    }
    J means = J::object();
    J means2 = J::object();
    for (std::size_t d = 0; d < table.devices.size(); ++d) {
      means[table.devices[d]] = opt(ct.mean_accuracy[d]);
      means2[table.devices[d]] = opt2(ct.mean_accuracy[d]);
    }
    c["mean_accuracy"] = std::move(means);
    c["mean_accuracy_2dp"] = std::move(means2);
    j["conditions"].push_back(std::move(c));
  }
  return j;
}

/// Aligned plain-text rendering: one block per condition with
/// "count/accuracy" cells ("xx/xx" when missing) and an "Avg." row.
inline std::string render_table_text(const EvalTable& table) {
  std::vector<std::string> header{"Subject", "Truth"};
  header.insert(header.end(), table.devices.begin(), table.devices.end());
  std::vector<std::vector<std::string>> lines;  // empty vector marks a condition title
  std::vector<std::string> titles;
  for (const auto& ct : table.conditions) {
    titles.push_back(condition_title(ct.condition));
    lines.push_back({});
    for (const auto& r : ct.rows) {
      std::vector<std::string> cells{r.subject_id, std::to_string(r.truth)};
      for (std::size_t d = 0; d < table.devices.size(); ++d) {
        cells.push_back(r.counts[d] ? std::to_string(*r.counts[d]) + "/" + format_2dp(*r.accuracy_of(d)) : "xx/xx");
      }
      lines.push_back(std::move(cells));
    }
    std::vector<std::string> avg{"Avg.", ""};
    for (const auto& m : ct.mean_accuracy) avg.push_back(m ? format_2dp(*m) : "xx");
    lines.push_back(std::move(avg));
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& l : lines) {
    for (std::size_t c = 0; c < l.size(); ++c) width[c] = std::max(width[c], l[c].size());
  }
  const auto emit_row = [&](std::ostringstream& os, const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      line += cells[c];
      if (c + 1 < cells.size()) line += std::string(width[c] - cells[c].size() + 2, ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    os << line << '\n';
  };
  std::ostringstream os;
  emit_row(os, header);
  std::size_t title = 0;
  for (const auto& l : lines) {
    if (l.empty()) {
      os << "-- " << titles[title++] << " --\n";
    } else {
      emit_row(os, l);
    }
  }
  return os.str();
}

inline nlohmann::ordered_json to_json(const PeakParams& p) {
  return {{"prominence", p.prominence_min}, {"distance", p.distance_min}};
}

/// Dataset document:
///   {"sessions": [{"subject_id": ..., "signal": "file.csv"?, "subsessions": [...]}]}
/// Signal paths are relative to the dataset file.
inline std::vector<DatasetSession> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const Json doc = parse_json_text(ss.str());
  if (!doc.contains("sessions") || !doc["sessions"].is_array()) {
    throw Error(ErrorCode::InvalidManifest, "dataset needs a 'sessions' array");
  }
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<DatasetSession> out;
  for (const auto& s : doc["sessions"]) {
    DatasetSession ds;
    ds.manifest = manifest_from_json(s);
    if (s.contains("signal") && !s["signal"].is_null()) {
      const std::string rel = s["signal"].get<std::string>();
      ds.series = load_csv((base / rel).string());
      validate(ds.manifest, ds.series->size());
    }
    out.push_back(std::move(ds));
  }
  return out;
}

}  // namespace qvarstep
