#pragma once

// Append-only knowledge base of contextualised concept sets
// (vessel, behaviour, causality, time).

#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "sxai/explain.hpp"

namespace sxai {

enum class ExplanationType { behaviour_causality, replanning_clarification, counterfactual };

inline std::string_view to_string(ExplanationType t) {
  switch (t) {
    case ExplanationType::behaviour_causality: return "behaviour_causality";
    case ExplanationType::replanning_clarification: return "replanning_clarification";
    default: return "counterfactual";
  }
}

inline ExplanationType parse_explanation_type(std::string_view s) {
  if (s == "behaviour_causality" || s == "E1") return ExplanationType::behaviour_causality;
  if (s == "replanning_clarification" || s == "E2") return ExplanationType::replanning_clarification;
  if (s == "counterfactual" || s == "E3") return ExplanationType::counterfactual;
  throw unknown_category("explanation_type", s);
}

struct CauseEntry {
  std::string feature;
  std::string value;
  double weight = 0.0;

  bool operator==(const CauseEntry&) const = default;
};

struct ConceptSet {
  std::string vessel;
  Behaviour behaviour = Behaviour::wait;
  std::vector<CauseEntry> causality;
  std::string mission;
  std::int64_t tick = 0;
  ExplanationType explanation_type = ExplanationType::behaviour_causality;
  double confidence = 0.0;

  std::set<std::string> cause_features() const {
    std::set<std::string> out;
    for (const auto& c : causality) out.insert(c.feature);
    return out;
  }

  bool operator==(const ConceptSet&) const = default;
};

inline bool is_replanning(Behaviour b) {
  return b == Behaviour::replanned_transit || b == Behaviour::avoid_obstacle;
}

inline std::vector<CauseEntry> to_entries(const CausalitySet& causes) {
  std::vector<CauseEntry> out;
  for (const auto& c : causes.causes)
    out.push_back({std::string(kFeatureNames[c.feature]),
                   std::string(decode_category(c.feature, c.value)), c.weight});
  return out;
}

inline ConceptSet make_concept_set(std::string vessel, const Prediction& prediction,
                                   const CausalitySet& causality, std::int64_t tick,
                                   std::string mission = {}) {
  ConceptSet cs;
  cs.vessel = std::move(vessel);
  cs.behaviour = prediction.behaviour;
  cs.causality = to_entries(causality);
  cs.mission = std::move(mission);
  cs.tick = tick;
  cs.explanation_type = is_replanning(prediction.behaviour) ? ExplanationType::replanning_clarification
                                                            : ExplanationType::behaviour_causality;
  cs.confidence = prediction.confidence();
  return cs;
}

/// Wraps a what-if answer. The causality lists the edited features with
/// their change in contribution.
inline ConceptSet make_counterfactual_concept_set(std::string vessel, const CounterfactualResult& r,
                                                  std::int64_t tick, std::string mission = {}) {
  ConceptSet cs;
  cs.vessel = std::move(vessel);
  cs.behaviour = r.edited_prediction.behaviour;
  for (const auto& [f, v] : r.edits)
    cs.causality.push_back({std::string(kFeatureNames[f]), std::string(decode_category(f, v)), r.delta[f]});
  cs.mission = std::move(mission);
  cs.tick = tick;
  cs.explanation_type = ExplanationType::counterfactual;
  cs.confidence = r.edited_prediction.confidence();
  return cs;
}

// ---------------------------------------------------------------------------
// Wire form: one JSON object per line.

inline nlohmann::json to_json(const ConceptSet& cs) {
  nlohmann::json causes = nlohmann::json::array();
  for (const auto& c : cs.causality)
    causes.push_back({{"feature", c.feature}, {"value", c.value}, {"weight", c.weight}});
  return {{"vessel", cs.vessel},
          {"behaviour", to_string(cs.behaviour)},
          {"causality", causes},
          {"time", {{"mission", cs.mission}, {"tick", cs.tick}}},
          {"explanation_type", to_string(cs.explanation_type)},
          {"confidence", cs.confidence}};
}

inline ConceptSet concept_set_from_json(const nlohmann::json& j) {
  try {
    ConceptSet cs;
    cs.vessel = j.at("vessel").get<std::string>();
    cs.behaviour = parse_behaviour(j.at("behaviour").get<std::string>());
    for (const auto& c : j.at("causality")) {
      CauseEntry e{c.at("feature").get<std::string>(), c.at("value").get<std::string>(),
                   c.at("weight").get<double>()};
      encode_category(require_feature(e.feature), e.value);
      cs.causality.push_back(std::move(e));
    }
    cs.mission = j.at("time").at("mission").get<std::string>();
    cs.tick = j.at("time").at("tick").get<std::int64_t>();
    cs.explanation_type = parse_explanation_type(j.at("explanation_type").get<std::string>());
    cs.confidence = j.at("confidence").get<double>();
    if (cs.confidence < 0.0 || cs.confidence > 1.0)
      throw Error(Errc::parse_error, "confidence outside [0, 1]");
    return cs;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, e.what());
  }
}

inline std::string serialise(const ConceptSet& cs) { return to_json(cs).dump(); }

inline ConceptSet parse_concept_set(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, e.what());
  }
  return concept_set_from_json(j);
}

// ---------------------------------------------------------------------------

struct KnowledgeQuery {
  std::optional<std::string> vessel{};
  std::optional<std::int64_t> from_tick{};  // inclusive
  std::optional<std::int64_t> to_tick{};    // inclusive
  std::optional<Behaviour> behaviour{};
  std::optional<ExplanationType> type{};
};

/// Ordered entries of one mission. One writer appends while any number of
/// readers query; readers always see a consistent prefix. When a log path is
/// given every stored entry is also appended to that file.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  explicit KnowledgeBase(std::string log_path) : log_path_(std::move(log_path)) {
    if (!log_path_.empty()) {
      log_.open(log_path_, std::ios::binary | std::ios::trunc);
      if (!log_) throw Error(Errc::io_error, "cannot write '" + log_path_ + "'");
    }
  }

  /// Stores the entry unless it repeats the latest (behaviour, causality
  /// feature set) of the same vessel in the same mission; counterfactual
  /// entries are always stored.
  bool append(const ConceptSet& cs) {
    std::unique_lock lock(mutex_);
    const auto key = stream_key(cs);
    const auto it = latest_.find(key);
    if (it != latest_.end()) {
      const auto& last = entries_[it->second];
      const bool cf = cs.explanation_type == ExplanationType::counterfactual;
      if (cs.tick < last.tick || (cs.tick == last.tick && !cf))
        throw Error(Errc::time_regression, "tick " + std::to_string(cs.tick) +
                                               " does not follow tick " + std::to_string(last.tick) +
                                               " for vessel " + cs.vessel);
      if (!cf) {
        const auto lr = latest_live_.find(key);
        if (lr != latest_live_.end()) {
          const auto& prev = entries_[lr->second];
          if (prev.behaviour == cs.behaviour && prev.cause_features() == cs.cause_features())
            return false;
        }
      }
    }
    entries_.push_back(cs);
    latest_[key] = entries_.size() - 1;
    if (cs.explanation_type != ExplanationType::counterfactual)
      latest_live_[key] = entries_.size() - 1;
    if (log_.is_open()) {
      log_ << serialise(cs) << '\n';
      log_.flush();
    }
    return true;
  }

  std::vector<ConceptSet> query(const KnowledgeQuery& q = {}) const {
    std::shared_lock lock(mutex_);
    std::vector<ConceptSet> out;
    for (const auto& e : entries_) {
      if (q.vessel && e.vessel != *q.vessel) continue;
      if (q.from_tick && e.tick < *q.from_tick) continue;
      if (q.to_tick && e.tick > *q.to_tick) continue;
      if (q.behaviour && e.behaviour != *q.behaviour) continue;
      if (q.type && e.explanation_type != *q.type) continue;
      out.push_back(e);
    }
    return out;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

  std::vector<ConceptSet> entries() const { return query(); }

  std::string serialise_all() const {
    std::shared_lock lock(mutex_);
    std::string out;
    for (const auto& e : entries_) out += serialise(e) + '\n';
    return out;
  }

 private:
  // Ticks are local to a mission, so ordering and dedup are per (mission, vessel).
  static std::string stream_key(const ConceptSet& cs) { return cs.mission + '\n' + cs.vessel; }

  std::string log_path_;
  std::ofstream log_;
  mutable std::shared_mutex mutex_;
  std::vector<ConceptSet> entries_;
  std::map<std::string, std::size_t> latest_;
  // Dedup compares against the latest non-counterfactual entry.
  std::map<std::string, std::size_t> latest_live_;
};

inline std::vector<ConceptSet> query(const KnowledgeBase& kb, const KnowledgeQuery& q = {}) {
  return kb.query(q);
}

inline std::vector<ConceptSet> parse_knowledge(std::istream& in) {
  std::vector<ConceptSet> out;
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(parse_concept_set(line));
    } catch (const Error& e) {
      throw Error(Errc::parse_error, "line " + std::to_string(n) + ": " + e.what(), "", "", n);
    }
  }
  return out;
}

inline std::vector<ConceptSet> load_knowledge(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open '" + path + "'");
  return parse_knowledge(in);
}

}  // namespace sxai
