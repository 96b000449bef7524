#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "sxai/dataset.hpp"
#include "sxai/domain.hpp"

namespace sxai {

using ClassCounts = std::array<std::int64_t, kBehaviourCount>;
using Probabilities = std::array<double, kBehaviourCount>;

struct Prediction {
  Probabilities probabilities{};
  Behaviour behaviour = Behaviour::wait;

  double confidence() const { return probabilities[code_of(behaviour)]; }
  double probability(Behaviour b) const { return probabilities[code_of(b)]; }

  bool operator==(const Prediction&) const = default;
};

/// Builds a prediction; the argmax breaks ties towards the lowest code.
inline Prediction make_prediction(const Probabilities& p) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < kBehaviourCount; ++c)
    if (p[c] > p[best]) best = c;
  return {p, behaviour_from_code(best)};
}

inline Prediction prediction_from_counts(const ClassCounts& counts) {
  const auto total = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
  Probabilities p{};
  for (std::size_t c = 0; c < kBehaviourCount; ++c)
    p[c] = total > 0 ? static_cast<double>(counts[c]) / static_cast<double>(total) : 0.0;
  return make_prediction(p);
}

/// Trained surrogate. Implementations are immutable after construction, so
/// `predict` may be called concurrently.
class Classifier {
 public:
  virtual ~Classifier() = default;

  /// Identifier stored in model files ("decision_tree", "categorical_nb", "knn").
  virtual std::string_view kind() const = 0;

  virtual Prediction predict(const Codes& x) const = 0;

  /// Parameters section of the model file.
  virtual nlohmann::json parameters() const = 0;

  Prediction predict(const VehicleState& s) const { return predict(encode(s)); }
};

using ClassifierPtr = std::shared_ptr<const Classifier>;

inline Prediction predict(const Classifier& model, const VehicleState& s) { return model.predict(s); }

/// Per-state class counts over the selected rows; training works on this
/// table because the whole state space has only 240 points.
using StateCountTable = std::array<ClassCounts, kStateSpaceSize>;

inline StateCountTable aggregate(const Dataset& data, std::span<const std::size_t> rows) {
  StateCountTable t{};
  for (auto i : rows) ++t[state_index(data.features[i])][data.labels[i]];
  return t;
}

inline StateCountTable aggregate(const Dataset& data) {
  StateCountTable t{};
  for (std::size_t i = 0; i < data.size(); ++i) ++t[state_index(data.features[i])][data.labels[i]];
  return t;
}

inline std::vector<std::size_t> all_rows(const Dataset& data) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

}  // namespace sxai
