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

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qvarstep/error.hpp"
#include "qvarstep/signal_core.hpp"

namespace qvarstep {

using Json = nlohmann::ordered_json;

enum class Environment { ParkingLot, ShoppingCenter };

inline std::string to_string(Environment env) {
  return env == Environment::ParkingLot ? "ParkingLot" : "ShoppingCenter";
}

inline Environment environment_from_string(const std::string& s) {
  if (s == "ParkingLot") return Environment::ParkingLot;
  if (s == "ShoppingCenter") return Environment::ShoppingCenter;
  throw Error(ErrorCode::InvalidManifest, "unknown env '" + s + "'");
}

/// Reference count reported by another device for the same subsession.
/// An empty count marks a missing entry.
struct DeviceCount {
  std::string device;
  std::optional<int> count;

  friend bool operator==(const DeviceCount&, const DeviceCount&) = default;
};

struct Subsession {
  Environment env = Environment::ParkingLot;
  bool trolley = false;
  std::size_t start_index = 0;
  std::size_t end_index = 0;  // exclusive
  int truth_steps = 0;
  std::vector<DeviceCount> reference_counts;

  friend bool operator==(const Subsession&, const Subsession&) = default;
};

struct SessionManifest {
  std::string subject_id;
  std::vector<Subsession> subsessions;

  friend bool operator==(const SessionManifest&, const SessionManifest&) = default;
};

/// Checks ordering and truth invariants. With a series length, also checks
/// that every range lies within the series.
inline void validate(const SessionManifest& manifest, std::optional<std::size_t> series_length = std::nullopt) {
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < manifest.subsessions.size(); ++i) {
    const Subsession& s = manifest.subsessions[i];
    const std::string where = "subsession " + std::to_string(i);
    if (s.truth_steps < 0) throw Error(ErrorCode::InvalidManifest, where + ": negative truth_steps");
    if (s.start_index >= s.end_index) throw Error(ErrorCode::InvalidManifest, where + ": empty or inverted range");
    if (i > 0 && s.start_index < prev_end) {
      throw Error(ErrorCode::InvalidManifest, where + ": overlaps or precedes the previous subsession");
    }
    if (series_length && s.end_index > *series_length) {
      throw Error(ErrorCode::RangeOutOfBounds, where + ": end_index " + std::to_string(s.end_index) +
                                                   " beyond series length " + std::to_string(*series_length));
    }
    prev_end = s.end_index;
  }
}

/// Cuts the series into the manifest's half-open subsession ranges, in
/// manifest order.
inline std::vector<std::pair<Subsession, SampleSeries>> slice_sessions(const SampleSeries& series,
                                                                       const SessionManifest& manifest) {
  validate(manifest, series.size());
  std::vector<std::pair<Subsession, SampleSeries>> out;
  out.reserve(manifest.subsessions.size());
  for (const Subsession& s : manifest.subsessions) out.emplace_back(s, series.slice(s.start_index, s.end_index));
  return out;
}

// JSON mapping uses the field names verbatim.

inline Json to_json(const Subsession& s) {
  Json j;
  j["env"] = to_string(s.env);
  j["trolley"] = s.trolley;
  j["start_index"] = s.start_index;
  j["end_index"] = s.end_index;
  j["truth_steps"] = s.truth_steps;
  if (!s.reference_counts.empty()) {
    Json refs = Json::object();
    for (const auto& rc : s.reference_counts) refs[rc.device] = rc.count ? Json(*rc.count) : Json(nullptr);
    j["reference_counts"] = std::move(refs);
  }
  return j;
}

inline Json to_json(const SessionManifest& m) {
  Json j;
  j["subject_id"] = m.subject_id;
  j["subsessions"] = Json::array();
  for (const auto& s : m.subsessions) j["subsessions"].push_back(to_json(s));
  return j;
}

namespace detail {

template <typename T>
T required(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::InvalidManifest, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidManifest, std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline Subsession subsession_from_json(const Json& j) {
  Subsession s;
  s.env = environment_from_string(detail::required<std::string>(j, "env"));
  s.trolley = detail::required<bool>(j, "trolley");
  const auto start = detail::required<std::int64_t>(j, "start_index");
  const auto end = detail::required<std::int64_t>(j, "end_index");
  if (start < 0 || end < 0) throw Error(ErrorCode::InvalidManifest, "negative subsession index");
  s.start_index = static_cast<std::size_t>(start);
  s.end_index = static_cast<std::size_t>(end);
  s.truth_steps = detail::required<int>(j, "truth_steps");
  if (j.contains("reference_counts") && !j["reference_counts"].is_null()) {
    const Json& refs = j["reference_counts"];
    if (!refs.is_object()) throw Error(ErrorCode::InvalidManifest, "reference_counts must be an object");
    for (const auto& [device, value] : refs.items()) {
      if (value.is_null()) {
        s.reference_counts.push_back({device, std::nullopt});
      } else if (value.is_number_integer()) {
        s.reference_counts.push_back({device, value.get<int>()});
      } else {
        throw Error(ErrorCode::InvalidManifest, "reference count for '" + device + "' must be an integer or null");
      }
    }
  }
  return s;
}

inline SessionManifest manifest_from_json(const Json& j) {
  SessionManifest m;
  m.subject_id = detail::required<std::string>(j, "subject_id");
  if (!j.contains("subsessions") || !j["subsessions"].is_array()) {
    throw Error(ErrorCode::InvalidManifest, "missing array 'subsessions'");
  }
  for (const auto& s : j["subsessions"]) m.subsessions.push_back(subsession_from_json(s));
  validate(m);
  return m;
}

inline Json parse_json_text(const std::string& text, ErrorCode code = ErrorCode::InvalidManifest) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(code, e.what());
  }
}

}  // namespace qvarstep
