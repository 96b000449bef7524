#pragma once

// Feature attribution for single predictions.
//
// Shapley values are exact and interventional: the value of a coalition T is
// the mean, over background rows b, of the model's target-class probability
// on the composite that takes the instance's values on T and b's values
// elsewhere. With five features there are only 32 coalitions, so all are
// enumerated.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sxai/classifier.hpp"
#include "sxai/decision_tree.hpp"
#include "sxai/domain.hpp"
#include "sxai/rng.hpp"

namespace sxai {

enum class AttributionMethod { shapley, tree_path };

inline std::string_view to_string(AttributionMethod m) {
  return m == AttributionMethod::shapley ? "shapley" : "tree_path";
}

inline AttributionMethod parse_method(std::string_view s) {
  if (s == "shapley") return AttributionMethod::shapley;
  if (s == "tree_path") return AttributionMethod::tree_path;
  throw Error(Errc::invalid_argument, "unknown attribution method '" + std::string(s) + "'");
}

struct Attribution {
  Behaviour target = Behaviour::wait;
  double base = 0.0;
  double value = 0.0;  // f(x): target-class probability of the instance
  std::array<double, kFeatureCount> phi{};
  AttributionMethod method = AttributionMethod::shapley;
};

// ---------------------------------------------------------------------------
// Generic exact Shapley computation

/// |T|! (N - 1 - |T|)! / N! for every coalition size |T| < N.
template <std::size_t N>
constexpr std::array<double, N> shapley_weights() {
  std::array<double, N> w{};
  for (std::size_t s = 0; s < N; ++s) {
    double v = 1.0 / static_cast<double>(N);
    // 1 / (N * C(N-1, s))
    for (std::size_t i = 0; i < s; ++i)
      v *= static_cast<double>(i + 1) / static_cast<double>(N - 1 - i);
    w[s] = v;
  }
  return w;
}

/// phi_i = sum over T not containing i of w(|T|) (v(T + i) - v(T)), given the
/// value of every coalition indexed by its bitmask.
template <std::size_t N>
std::array<double, N> shapley_from_coalitions(const std::array<double, (1u << N)>& value) {
  constexpr auto w = shapley_weights<N>();
  std::array<double, N> phi{};
  for (unsigned t = 0; t < (1u << N); ++t) {
    const auto size = static_cast<std::size_t>(std::popcount(t));
    for (std::size_t i = 0; i < N; ++i) {
      if ((t >> i) & 1u) continue;
      phi[i] += w[size] * (value[t | (1u << i)] - value[t]);
    }
  }
  return phi;
}

/// Interventional coalition values of `f` at `x` over `background`.
template <std::size_t N, typename Point, typename F>
std::array<double, (1u << N)> coalition_values(F&& f, const Point& x,
                                               std::span<const Point> background) {
  std::array<double, (1u << N)> value{};
  for (unsigned t = 0; t < (1u << N); ++t) {
    double sum = 0.0;
    for (const auto& b : background) {
      Point z = b;
      for (std::size_t i = 0; i < N; ++i)
        if ((t >> i) & 1u) z[i] = x[i];
      sum += f(z);
    }
    value[t] = sum / static_cast<double>(background.size());
  }
  return value;
}

// ---------------------------------------------------------------------------
// Background

struct Background {
  std::vector<Codes> rows;
};

/// Deduplicated states of `data` in code order, sampled down to `cap` rows
/// with a seeded draw when larger.
inline Background make_background(const std::vector<Codes>& states, std::size_t cap = 512,
                                  std::uint64_t seed = 0) {
  std::vector<Codes> rows = states;
  std::ranges::sort(rows);
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  if (rows.size() > cap) {
    Rng rng(seed);
    rng.shuffle(std::span(rows));
    rows.resize(cap);
    std::ranges::sort(rows);
  }
  return {std::move(rows)};
}

// ---------------------------------------------------------------------------
// Model attributions

inline Attribution shapley_values(const Classifier& model, const Codes& x,
                                  const Background& background) {
  if (background.rows.empty()) throw Error(Errc::empty_background, "background set is empty");
  const auto prediction = model.predict(x);
  const auto target = code_of(prediction.behaviour);
  auto f = [&](const Codes& z) { return model.predict(z).probabilities[target]; };
  const auto values =
      coalition_values<kFeatureCount, Codes>(f, x, std::span<const Codes>(background.rows));

  Attribution a;
  a.target = prediction.behaviour;
  a.method = AttributionMethod::shapley;
  a.base = values.front();
  a.value = prediction.probabilities[target];
  a.phi = shapley_from_coalitions<kFeatureCount>(values);
  return a;
}

inline Attribution shapley_values(const Classifier& model, const VehicleState& s,
                                  const Background& background) {
  return shapley_values(model, encode(s), background);
}

inline double class_proportion(const ClassCounts& counts, std::size_t c) {
  std::int64_t total = 0;
  for (auto v : counts) total += v;
  return static_cast<double>(counts[c]) / static_cast<double>(total);
}

/// Walks the decision path and credits each split's change in target-class
/// proportion (child minus parent) to the split feature.
inline Attribution tree_path_contribution(const DecisionTree& tree, const Codes& x) {
  const auto leaf = tree.route(x);
  const auto prediction = prediction_from_counts(tree.node(leaf).counts);
  const auto target = code_of(prediction.behaviour);

  Attribution a;
  a.target = prediction.behaviour;
  a.method = AttributionMethod::tree_path;
  a.base = class_proportion(tree.node(0).counts, target);
  a.value = prediction.probabilities[target];

  int i = 0;
  while (!tree.node(i).is_leaf()) {
    const auto& n = tree.node(i);
    const int next = (n.left_mask >> x[static_cast<std::size_t>(n.feature)]) & 1u ? n.left : n.right;
    a.phi[static_cast<std::size_t>(n.feature)] +=
        class_proportion(tree.node(next).counts, target) - class_proportion(n.counts, target);
    i = next;
  }
  return a;
}

inline Attribution tree_path_contribution(const DecisionTree& tree, const VehicleState& s) {
  return tree_path_contribution(tree, encode(s));
}

/// Dispatches on method; tree_path requires a decision tree.
inline Attribution attribute(const Classifier& model, const Codes& x, const Background& background,
                             AttributionMethod method) {
  if (method == AttributionMethod::tree_path) {
    const auto* tree = dynamic_cast<const DecisionTree*>(&model);
    if (tree == nullptr)
      throw Error(Errc::invalid_argument, "tree_path attribution needs a decision tree");
    return tree_path_contribution(*tree, x);
  }
  return shapley_values(model, x, background);
}

// ---------------------------------------------------------------------------
// Causality

struct Cause {
  std::size_t feature = 0;
  std::uint8_t value = 0;
  double weight = 0.0;

  bool operator==(const Cause&) const = default;
};

struct CausalitySet {
  std::vector<Cause> causes;
  bool weak = false;  // no feature reached the threshold; strongest one kept
};

inline constexpr double kCausalityThreshold = 0.05;

/// Features whose contribution reaches `threshold`, strongest first (ties in
/// vocabulary order). Falls back to the single largest contribution.
inline CausalitySet infer_causality(const Attribution& a, const Codes& x,
                                    double threshold = kCausalityThreshold) {
  CausalitySet set;
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    if (a.phi[f] >= threshold) set.causes.push_back({f, x[f], a.phi[f]});
  std::ranges::stable_sort(set.causes, [](const Cause& l, const Cause& r) { return l.weight > r.weight; });
  if (set.causes.empty()) {
    std::size_t top = 0;
    for (std::size_t f = 1; f < kFeatureCount; ++f)
      if (a.phi[f] > a.phi[top]) top = f;
    set.causes.push_back({top, x[top], a.phi[top]});
    set.weak = true;
  }
  return set;
}

inline CausalitySet infer_causality(const Attribution& a, const VehicleState& s,
                                    double threshold = kCausalityThreshold) {
  return infer_causality(a, encode(s), threshold);
}

/// Features with negative contributions, most negative first.
inline std::vector<Cause> counter_evidence(const Attribution& a, const Codes& x) {
  std::vector<Cause> out;
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    if (a.phi[f] < 0.0) out.push_back({f, x[f], a.phi[f]});
  std::ranges::stable_sort(out, [](const Cause& l, const Cause& r) { return l.weight < r.weight; });
  return out;
}

// ---------------------------------------------------------------------------
// Counterfactuals

/// Feature index and new value code.
using Edit = std::pair<std::size_t, std::uint8_t>;

inline std::vector<Edit> parse_edits(const std::map<std::string, std::string>& raw) {
  std::vector<Edit> edits;
  for (const auto& [name, token] : raw) {
    const auto f = require_feature(name);
    edits.emplace_back(f, encode_category(f, token));
  }
  std::ranges::sort(edits);
  return edits;
}

struct CounterfactualResult {
  VehicleState original;
  Prediction original_prediction;
  std::vector<Edit> edits;
  VehicleState edited;
  Prediction edited_prediction;
  bool changed = false;
  Attribution original_attribution;
  Attribution edited_attribution;
  std::array<double, kFeatureCount> delta{};  // edited phi minus original phi
};

inline CounterfactualResult counterfactual(const Classifier& model, const VehicleState& state,
                                           const std::vector<Edit>& edits,
                                           const Background& background,
                                           AttributionMethod method = AttributionMethod::shapley) {
  if (edits.empty()) throw Error(Errc::empty_edit, "no feature edits given");
  CounterfactualResult r;
  r.original = state;
  r.edits = edits;
  auto codes = encode(state);
  for (const auto& [f, v] : edits) {
    if (f >= kFeatureCount) throw Error(Errc::unknown_feature, "feature index out of range");
    if (v >= kDomainSizes[f]) throw unknown_category(kFeatureNames[f], std::to_string(v));
    codes[f] = v;
  }
  r.edited = decode(codes);
  r.original_prediction = model.predict(state);
  r.edited_prediction = model.predict(r.edited);
  r.changed = r.original_prediction.behaviour != r.edited_prediction.behaviour;
  r.original_attribution = attribute(model, encode(state), background, method);
  r.edited_attribution = attribute(model, codes, background, method);
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    r.delta[f] = r.edited_attribution.phi[f] - r.original_attribution.phi[f];
  return r;
}

inline CounterfactualResult counterfactual(const Classifier& model, const VehicleState& state,
                                           const std::map<std::string, std::string>& edits,
                                           const Background& background,
                                           AttributionMethod method = AttributionMethod::shapley) {
  if (edits.empty()) throw Error(Errc::empty_edit, "no feature edits given");
  return counterfactual(model, state, parse_edits(edits), background, method);
}

// ---------------------------------------------------------------------------
// Wire form

inline nlohmann::json to_json(const Attribution& a) {
  nlohmann::json phi = nlohmann::json::object();
  for (std::size_t f = 0; f < kFeatureCount; ++f) phi[std::string(kFeatureNames[f])] = a.phi[f];
  return {{"target", to_string(a.target)}, {"base", a.base},  {"value", a.value},
          {"phi", phi},                    {"method", to_string(a.method)}};
}

inline nlohmann::json to_json(const Cause& c) {
  return {{"feature", kFeatureNames[c.feature]},
          {"value", decode_category(c.feature, c.value)},
          {"weight", c.weight}};
}

inline nlohmann::json to_json(const CausalitySet& s) {
  nlohmann::json causes = nlohmann::json::array();
  for (const auto& c : s.causes) causes.push_back(to_json(c));
  return {{"causes", causes}, {"weak", s.weak}};
}

inline nlohmann::json to_json(const Prediction& p) {
  nlohmann::json probs = nlohmann::json::object();
  for (std::size_t c = 0; c < kBehaviourCount; ++c) probs[std::string(kBehaviourTokens[c])] = p.probabilities[c];
  return {{"behaviour", to_string(p.behaviour)}, {"confidence", p.confidence()}, {"probabilities", probs}};
}

inline nlohmann::json to_json(const VehicleState& s) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t f = 0; f < kFeatureCount; ++f) j[std::string(kFeatureNames[f])] = feature_token(s, f);
  return j;
}

inline nlohmann::json to_json(const CounterfactualResult& r) {
  nlohmann::json edits = nlohmann::json::object();
  for (const auto& [f, v] : r.edits) edits[std::string(kFeatureNames[f])] = decode_category(f, v);
  nlohmann::json delta = nlohmann::json::object();
  for (std::size_t f = 0; f < kFeatureCount; ++f) delta[std::string(kFeatureNames[f])] = r.delta[f];
  return {{"original", {{"state", to_json(r.original)}, {"prediction", to_json(r.original_prediction)}}},
          {"edits", edits},
          {"edited", {{"state", to_json(r.edited)}, {"prediction", to_json(r.edited_prediction)}}},
          {"changed", r.changed},
          {"original_attribution", to_json(r.original_attribution)},
          {"edited_attribution", to_json(r.edited_attribution)},
          {"delta", delta}};
}

}  // namespace sxai
