// Copyright 2026 The A2Seek Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Code tables for scenes, actions, flight parameters, weather and risk.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace a2seek {

enum class ActionCode : std::uint8_t {
  E00, E01, E02, E03, E04, E05, E06, E07, E08, E09, E10,
  E11, E12, E13, E14, E15, E16, E17, E18, E19, E20,
};

inline constexpr int kNumActionCodes = 21;

enum class SceneCode : std::uint8_t { S00, S01, S02, S03, S04, S05, S06, S07, S08, S09 };

inline constexpr int kNumSceneCodes = 10;

enum class RiskLevel : std::uint8_t { Low, Moderate, High };

namespace detail {

inline constexpr std::array<std::string_view, kNumActionCodes> kActionNames = {
    "Normal",         "Loitering",      "Trespassing on Lawn",
    "Running",        "Animal",         "Vandalism",
    "Falling",        "Unable to Stand", "Playing with Water",
    "Unconventional Vehicle", "Wall Climbing", "Carrying Weapon",
    "Jaywalking",     "Bicycling",      "Bullying",
    "Lost Item",      "Sneaking",       "Theft",
    "Fighting",       "Robbery",        "Littering",
};

inline constexpr std::array<std::string_view, kNumSceneCodes> kSceneNames = {
    "Miscellaneous", "Roadway",  "Sidewalk", "Playground", "Open Area",
    "Park",          "Rooftop",  "Entrance", "Wall Zone",  "Academic Building",
};

// Parses "<prefix>NN" with NN in [0, count).
inline std::optional<int> parse_numbered(std::string_view text, char prefix, int count) {
  if (text.size() != 3 || text[0] != prefix) return std::nullopt;
  if (text[1] < '0' || text[1] > '9' || text[2] < '0' || text[2] > '9') return std::nullopt;
  int value = (text[1] - '0') * 10 + (text[2] - '0');
  if (value >= count) return std::nullopt;
  return value;
}

inline std::string format_numbered(char prefix, int value) {
  std::string out(3, '0');
  out[0] = prefix;
  out[1] = static_cast<char>('0' + value / 10);
  out[2] = static_cast<char>('0' + value % 10);
  return out;
}

}  // namespace detail

inline std::string to_string(ActionCode code) {
  return detail::format_numbered('E', static_cast<int>(code));
}

inline std::optional<ActionCode> parse_action_code(std::string_view text) {
  auto v = detail::parse_numbered(text, 'E', kNumActionCodes);
  if (!v) return std::nullopt;
  return static_cast<ActionCode>(*v);
}

inline std::string_view action_name(ActionCode code) {
  return detail::kActionNames[static_cast<std::size_t>(code)];
}

inline bool is_abnormal(ActionCode code) { return code != ActionCode::E00; }

inline RiskLevel risk_level(ActionCode code) {
  switch (code) {
    case ActionCode::E05: case ActionCode::E11: case ActionCode::E14:
    case ActionCode::E17: case ActionCode::E18: case ActionCode::E19:
      return RiskLevel::High;
    case ActionCode::E06: case ActionCode::E07: case ActionCode::E09:
    case ActionCode::E10: case ActionCode::E12: case ActionCode::E16:
      return RiskLevel::Moderate;
    default:
      return RiskLevel::Low;
  }
}

inline std::string to_string(SceneCode code) {
  return detail::format_numbered('S', static_cast<int>(code));
}

inline std::optional<SceneCode> parse_scene_code(std::string_view text) {
  auto v = detail::parse_numbered(text, 'S', kNumSceneCodes);
  if (!v) return std::nullopt;
  return static_cast<SceneCode>(*v);
}

inline std::string_view scene_name(SceneCode code) {
  return detail::kSceneNames[static_cast<std::size_t>(code)];
}

// Flight metadata codes. Weather codes are sparse (W4, W6, W7 are unused).
enum class Height : std::uint8_t { H0, H1 };
enum class Velocity : std::uint8_t { M0, M1, M2 };
enum class TimeOfDay : std::uint8_t { L0, L1, L2 };
enum class Weather : std::uint8_t { W0 = 0, W1 = 1, W2 = 2, W3 = 3, W5 = 5, W8 = 8 };

inline std::optional<Height> parse_height(std::string_view s) {
  if (s == "H0") return Height::H0;
  if (s == "H1") return Height::H1;
  return std::nullopt;
}

inline std::optional<Velocity> parse_velocity(std::string_view s) {
  if (s.size() == 2 && s[0] == 'M' && s[1] >= '0' && s[1] <= '2')
    return static_cast<Velocity>(s[1] - '0');
  return std::nullopt;
}

inline std::optional<TimeOfDay> parse_time_of_day(std::string_view s) {
  if (s.size() == 2 && s[0] == 'L' && s[1] >= '0' && s[1] <= '2')
    return static_cast<TimeOfDay>(s[1] - '0');
  return std::nullopt;
}

inline std::optional<Weather> parse_weather(std::string_view s) {
  if (s.size() != 2 || s[0] != 'W') return std::nullopt;
  switch (s[1]) {
    case '0': return Weather::W0;
    case '1': return Weather::W1;
    case '2': return Weather::W2;
    case '3': return Weather::W3;
    case '5': return Weather::W5;
    case '8': return Weather::W8;
    default: return std::nullopt;
  }
}

inline std::string to_string(Height h) { return "H" + std::to_string(static_cast<int>(h)); }
inline std::string to_string(Velocity v) { return "M" + std::to_string(static_cast<int>(v)); }
inline std::string to_string(TimeOfDay t) { return "L" + std::to_string(static_cast<int>(t)); }
inline std::string to_string(Weather w) { return "W" + std::to_string(static_cast<int>(w)); }

}  // namespace a2seek
