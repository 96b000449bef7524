#pragma once

#include <algorithm>
#include <vector>

#include "sxai/classifier.hpp"
#include "sxai/error.hpp"

namespace sxai {

inline int hamming(const Codes& a, const Codes& b) {
  int d = 0;
  for (std::size_t f = 0; f < kFeatureCount; ++f) d += a[f] != b[f];
  return d;
}

inline int hamming(const VehicleState& a, const VehicleState& b) {
  return hamming(encode(a), encode(b));
}

/// k-nearest-neighbour vote over Hamming distance. Equidistant rows are taken
/// in training-row order. Predictions depend only on the query state, so the
/// model tabulates all 240 answers when it is built.
class KnnModel final : public Classifier {
 public:
  KnnModel(std::vector<Codes> rows, std::vector<std::uint8_t> labels, int k)
      : rows_(std::move(rows)), labels_(std::move(labels)), k_(k) {
    if (rows_.size() != labels_.size())
      throw Error(Errc::length_mismatch, "feature rows and labels differ in length");
    if (rows_.empty()) throw Error(Errc::empty_dataset, "cannot train on an empty dataset");
    if (k_ < 1 || static_cast<std::size_t>(k_) > rows_.size())
      throw Error(Errc::invalid_k, "k must lie in [1, " + std::to_string(rows_.size()) + "]");

    std::array<std::vector<std::uint32_t>, kStateSpaceSize> by_state;
    for (std::size_t i = 0; i < rows_.size(); ++i)
      by_state[state_index(rows_[i])].push_back(static_cast<std::uint32_t>(i));

    std::vector<std::uint32_t> level;
    std::vector<std::uint32_t> chosen;
    for (std::size_t q = 0; q < kStateSpaceSize; ++q) {
      const auto query = codes_from_index(q);
      chosen.clear();
      for (int d = 0; d <= static_cast<int>(kFeatureCount) && chosen.size() < static_cast<std::size_t>(k_); ++d) {
        level.clear();
        for (std::size_t s = 0; s < kStateSpaceSize; ++s)
          if (!by_state[s].empty() && hamming(codes_from_index(s), query) == d)
            level.insert(level.end(), by_state[s].begin(), by_state[s].end());
        const auto need = std::min(level.size(), static_cast<std::size_t>(k_) - chosen.size());
        std::ranges::nth_element(level, level.begin() + static_cast<long>(need));
        chosen.insert(chosen.end(), level.begin(), level.begin() + static_cast<long>(need));
      }
      ClassCounts votes{};
      for (auto i : chosen) ++votes[labels_[i]];
      table_[q] = prediction_from_counts(votes);
    }
  }

  using Classifier::predict;

  std::string_view kind() const override { return "knn"; }

  Prediction predict(const Codes& x) const override { return table_[state_index(x)]; }

  nlohmann::json parameters() const override {
    return {{"k", k_}, {"rows", rows_}, {"labels", labels_}};
  }

  static KnnModel from_parameters(const nlohmann::json& j) {
    return KnnModel(j.at("rows").get<std::vector<Codes>>(),
                    j.at("labels").get<std::vector<std::uint8_t>>(), j.at("k").get<int>());
  }

  int k() const { return k_; }

 private:
  std::vector<Codes> rows_;
  std::vector<std::uint8_t> labels_;
  int k_;
  std::array<Prediction, kStateSpaceSize> table_{};
};

inline KnnModel train_knn(const Dataset& data, int k = 5) {
  if (data.empty()) throw Error(Errc::empty_dataset, "cannot train on an empty dataset");
  return KnnModel(data.features, data.labels, k);
}

inline KnnModel train_knn(const Dataset& data, std::span<const std::size_t> rows, int k) {
  std::vector<Codes> x;
  std::vector<std::uint8_t> y;
  x.reserve(rows.size());
  y.reserve(rows.size());
  for (auto i : rows) {
    x.push_back(data.features[i]);
    y.push_back(data.labels[i]);
  }
  return KnnModel(std::move(x), std::move(y), k);
}

inline Prediction knn_predict(const KnnModel& model, const VehicleState& s) { return model.predict(s); }

}  // namespace sxai
