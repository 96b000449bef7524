#pragma once

// Rule-based surface realisation. The subject is always the vessel (third
// person singular): present progressive for behaviour and replanning
// explanations, modal "would" for counterfactuals.

#include <array>
#include <cctype>
#include <string>
#include <string_view>

#include "sxai/knowledge.hpp"

namespace sxai {

struct BehaviourTemplate {
  std::string_view progressive;  // follows "is"
  std::string_view infinitive;   // follows "would"
};

inline constexpr std::array<BehaviourTemplate, kBehaviourCount> kBehaviourTemplates{{
    {"waiting for a valid plan", "wait for a valid plan"},
    {"transiting to its objective", "transit to its objective"},
    {"performing a survey of the area", "perform a survey of the area"},
    {"holding its position", "hold its position"},
    {"transiting along a replanned route", "transit along a replanned route"},
    {"changing its trajectory to avoid an obstacle", "change its trajectory to avoid an obstacle"},
}};

/// Indicative and subjunctive phrasing of one (feature, value) pair.
struct CausePhrase {
  std::string_view feature;
  std::string_view value;
  std::string_view because;   // "... because <because>"
  std::string_view if_clause; // "If <if_clause>, ..."
};

inline constexpr std::array<CausePhrase, kFeatureValueCount> kCausePhrases{{
    {"ready_plan", "false", "no valid plan is loaded", "no valid plan were loaded"},
    {"ready_plan", "true", "a valid plan is loaded", "a valid plan were loaded"},
    {"current_objective", "none", "there is no current objective", "there were no current objective"},
    {"current_objective", "launch", "the current objective is a launch", "the current objective were a launch"},
    {"current_objective", "waypoint", "the current objective is a waypoint", "the current objective were a waypoint"},
    {"current_objective", "survey", "the current objective is a survey", "the current objective were a survey"},
    {"current_objective", "hold", "the current objective is to hold position", "the current objective were to hold position"},
    {"current_objective", "recovery", "the current objective is a recovery", "the current objective were a recovery"},
    {"progress_type", "idle", "it is idle", "it were idle"},
    {"progress_type", "transiting", "it is still heading to the objective", "it were still heading to the objective"},
    {"progress_type", "executing", "it is executing the objective", "it were executing the objective"},
    {"progress_type", "replanning", "its route is being replanned", "its route were being replanned"},
    {"progress_type", "completed", "its objectives are completed", "its objectives were completed"},
    {"same_objective", "false", "the objective has just changed", "the objective had just changed"},
    {"same_objective", "true", "the objective has not changed", "the objective had not changed"},
    {"obstacle_found", "false", "no obstacle has been detected", "no obstacle were detected"},
    {"obstacle_found", "true", "an obstacle was detected on its path", "an obstacle were detected"},
}};

inline const CausePhrase& cause_phrase(std::string_view feature, std::string_view value) {
  for (const auto& p : kCausePhrases)
    if (p.feature == feature && p.value == value) return p;
  throw Error(Errc::missing_template,
              "no phrase for " + std::string(feature) + "=" + std::string(value),
              std::string(feature), std::string(value));
}

inline std::string capitalise(std::string_view s) {
  std::string out(s);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

namespace detail {

template <typename Range, typename Phrase>
std::string join_and(const Range& items, Phrase phrase) {
  std::string out;
  bool first = true;
  for (const auto& item : items) {
    if (!first) out += " and ";
    out += phrase(item);
    first = false;
  }
  return out;
}

}  // namespace detail

/// Renders one knowledge entry:
///   E.1  "<Vessel> is <progressive> because <cause>[ and <cause>]*."
///   E.2  "Replanning was needed: " + E.1 form
///   E.3  "If <edit>[ and <edit>]*, <Vessel> would <infinitive>."
inline std::string realise(const ConceptSet& cs) {
  if (cs.causality.empty())
    throw Error(Errc::missing_template, "concept set has no causality entries");
  const auto& t = kBehaviourTemplates[code_of(cs.behaviour)];
  const auto vessel = capitalise(cs.vessel);

  if (cs.explanation_type == ExplanationType::counterfactual) {
    const auto edits = detail::join_and(cs.causality, [](const CauseEntry& c) {
      return std::string(cause_phrase(c.feature, c.value).if_clause);
    });
    return "If " + edits + ", " + vessel + " would " + std::string(t.infinitive) + ".";
  }

  const auto causes = detail::join_and(cs.causality, [](const CauseEntry& c) {
    return std::string(cause_phrase(c.feature, c.value).because);
  });
  std::string sentence =
      vessel + " is " + std::string(t.progressive) + " because " + causes + ".";
  if (cs.explanation_type == ExplanationType::replanning_clarification)
    sentence = "Replanning was needed: " + sentence;
  return sentence;
}

/// What-if answer:
///   changed:    "If <edit>[ and <edit>]*, <Vessel> would <infinitive>."
///   unchanged:  "If <edit>[ and <edit>]*, <Vessel> would continue <progressive>."
inline std::string realise_counterfactual(const CounterfactualResult& r,
                                          std::string_view vessel = kSurveyorVessel) {
  const auto edits = detail::join_and(r.edits, [](const Edit& e) {
    return std::string(cause_phrase(kFeatureNames[e.first], decode_category(e.first, e.second)).if_clause);
  });
  const auto& t = kBehaviourTemplates[code_of(r.edited_prediction.behaviour)];
  const auto tail = r.changed ? std::string(t.infinitive) : "continue " + std::string(t.progressive);
  return "If " + edits + ", " + capitalise(vessel) + " would " + tail + ".";
}

}  // namespace sxai
