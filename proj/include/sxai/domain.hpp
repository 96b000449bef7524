#pragma once

// Closed categorical vocabulary shared by the whole pipeline: the six
// behaviours, the five observed vehicle-state features, and the integer
// coding between symbolic and coded forms.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sxai/error.hpp"

namespace sxai {

inline constexpr std::size_t kBehaviourCount = 6;
inline constexpr std::size_t kFeatureCount = 5;

enum class Behaviour : std::uint8_t {
  wait = 0,
  transit,
  survey,
  hold_position,
  replanned_transit,
  avoid_obstacle,
};

enum class Objective : std::uint8_t { none = 0, launch, waypoint, survey, hold, recovery };

enum class Progress : std::uint8_t { idle = 0, transiting, executing, replanning, completed };

inline constexpr std::array<std::string_view, kBehaviourCount> kBehaviourTokens{
    "wait", "transit", "survey", "hold_position", "replanned_transit", "avoid_obstacle"};

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "ready_plan", "current_objective", "progress_type", "same_objective", "obstacle_found"};

enum Feature : std::size_t {
  kReadyPlan = 0,
  kCurrentObjective = 1,
  kProgressType = 2,
  kSameObjective = 3,
  kObstacleFound = 4,
};

namespace detail {
inline constexpr std::array<std::string_view, 2> kBoolTokens{"false", "true"};
inline constexpr std::array<std::string_view, 6> kObjectiveTokens{
    "none", "launch", "waypoint", "survey", "hold", "recovery"};
inline constexpr std::array<std::string_view, 5> kProgressTokens{
    "idle", "transiting", "executing", "replanning", "completed"};
}  // namespace detail

inline constexpr std::array<std::size_t, kFeatureCount> kDomainSizes{2, 6, 5, 2, 2};

// 2 * 6 * 5 * 2 * 2
inline constexpr std::size_t kStateSpaceSize = 240;

// Number of (feature, value) pairs across all domains.
inline constexpr std::size_t kFeatureValueCount = 17;

/// Integer codes of one state, in vocabulary feature order.
using Codes = std::array<std::uint8_t, kFeatureCount>;

// ---------------------------------------------------------------------------
// Behaviour

constexpr std::uint8_t code_of(Behaviour b) { return static_cast<std::uint8_t>(b); }

constexpr Behaviour behaviour_from_code(std::size_t code) {
  return static_cast<Behaviour>(code);
}

constexpr std::string_view to_string(Behaviour b) { return kBehaviourTokens[code_of(b)]; }

inline std::optional<Behaviour> try_parse_behaviour(std::string_view token) {
  for (std::size_t i = 0; i < kBehaviourCount; ++i)
    if (kBehaviourTokens[i] == token) return behaviour_from_code(i);
  return std::nullopt;
}

inline Behaviour parse_behaviour(std::string_view token) {
  if (auto b = try_parse_behaviour(token)) return *b;
  throw unknown_category("behaviour", token);
}

constexpr std::string_view to_string(Objective o) {
  return detail::kObjectiveTokens[static_cast<std::size_t>(o)];
}

constexpr std::string_view to_string(Progress p) {
  return detail::kProgressTokens[static_cast<std::size_t>(p)];
}

// ---------------------------------------------------------------------------
// Feature vocabulary

/// Category tokens of feature `f`, ordered by code.
constexpr std::span<const std::string_view> categories(std::size_t f) {
  switch (f) {
    case kReadyPlan:
    case kSameObjective:
    case kObstacleFound: return detail::kBoolTokens;
    case kCurrentObjective: return detail::kObjectiveTokens;
    default: return detail::kProgressTokens;
  }
}

inline std::optional<std::size_t> feature_index(std::string_view name) {
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    if (kFeatureNames[f] == name) return f;
  return std::nullopt;
}

inline std::size_t require_feature(std::string_view name) {
  if (auto f = feature_index(name)) return *f;
  throw Error(Errc::unknown_feature, "no feature named '" + std::string(name) + "'",
              std::string(name));
}

inline std::uint8_t encode_category(std::size_t feature, std::string_view token) {
  const auto cats = categories(feature);
  for (std::size_t c = 0; c < cats.size(); ++c)
    if (cats[c] == token) return static_cast<std::uint8_t>(c);
  throw unknown_category(kFeatureNames[feature], token);
}

inline std::string_view decode_category(std::size_t feature, std::size_t code) {
  const auto cats = categories(feature);
  if (code >= cats.size())
    throw unknown_category(kFeatureNames[feature], std::to_string(code));
  return cats[code];
}

// Stable identity of the vocabulary (FNV-1a over names and ordered tokens).
// Model files carry it so a model is never applied under a different coding.
inline std::string vocabulary_hash() {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::string_view s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ull;
    }
    h ^= 0xff;
    h *= 1099511628211ull;
  };
  for (auto b : kBehaviourTokens) mix(b);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    mix(kFeatureNames[f]);
    for (auto c : categories(f)) mix(c);
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
    h >>= 4;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vehicle state

struct VehicleState {
  bool ready_plan = false;
  Objective current_objective = Objective::none;
  Progress progress_type = Progress::idle;
  bool same_objective = false;
  bool obstacle_found = false;

  auto operator<=>(const VehicleState&) const = default;
};

constexpr Codes encode(const VehicleState& s) {
  return {static_cast<std::uint8_t>(s.ready_plan), static_cast<std::uint8_t>(s.current_objective),
          static_cast<std::uint8_t>(s.progress_type), static_cast<std::uint8_t>(s.same_objective),
          static_cast<std::uint8_t>(s.obstacle_found)};
}

inline VehicleState decode(const Codes& c) {
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    if (c[f] >= kDomainSizes[f]) throw unknown_category(kFeatureNames[f], std::to_string(c[f]));
  return {c[0] != 0, static_cast<Objective>(c[1]), static_cast<Progress>(c[2]), c[3] != 0,
          c[4] != 0};
}

/// Mixed-radix index in [0, 240); feature 0 is the most significant digit, so
/// index order is lexicographic order of the codes.
constexpr std::size_t state_index(const Codes& c) {
  std::size_t idx = 0;
  for (std::size_t f = 0; f < kFeatureCount; ++f) idx = idx * kDomainSizes[f] + c[f];
  return idx;
}

constexpr Codes codes_from_index(std::size_t idx) {
  Codes c{};
  for (std::size_t f = kFeatureCount; f-- > 0;) {
    c[f] = static_cast<std::uint8_t>(idx % kDomainSizes[f]);
    idx /= kDomainSizes[f];
  }
  return c;
}

/// Token of feature `f` in state `s`.
inline std::string_view feature_token(const VehicleState& s, std::size_t f) {
  return decode_category(f, encode(s)[f]);
}

/// Resolves a raw feature map into a state. The map must hold exactly the
/// five feature keys.
inline VehicleState validate_state(const std::map<std::string, std::string>& raw) {
  for (const auto& [key, value] : raw) require_feature(key);
  Codes c{};
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const auto it = raw.find(std::string(kFeatureNames[f]));
    if (it == raw.end())
      throw Error(Errc::unknown_feature, "missing feature '" + std::string(kFeatureNames[f]) + "'",
                  std::string(kFeatureNames[f]));
    c[f] = encode_category(f, it->second);
  }
  return decode(c);
}

/// Parses `key=value,key=value,...`.
inline std::map<std::string, std::string> parse_assignments(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    auto item = text.substr(pos, end - pos);
    if (!item.empty()) {
      const auto eq = item.find('=');
      if (eq == std::string_view::npos || eq == 0)
        throw Error(Errc::parse_error, "expected key=value, got '" + std::string(item) + "'");
      out[std::string(item.substr(0, eq))] = std::string(item.substr(eq + 1));
    }
    pos = end + 1;
  }
  return out;
}

inline std::map<std::string, std::string> to_token_map(const VehicleState& s) {
  std::map<std::string, std::string> out;
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    out[std::string(kFeatureNames[f])] = std::string(feature_token(s, f));
  return out;
}

/// All 240 states in lexicographic order of their codes.
inline std::vector<VehicleState> enumerate_state_space() {
  std::vector<VehicleState> out;
  out.reserve(kStateSpaceSize);
  for (std::size_t i = 0; i < kStateSpaceSize; ++i) out.push_back(decode(codes_from_index(i)));
  return out;
}

}  // namespace sxai
