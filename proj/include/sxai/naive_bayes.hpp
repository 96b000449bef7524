#pragma once

#include <array>
#include <cmath>
#include <limits>

#include "sxai/classifier.hpp"
#include "sxai/error.hpp"

namespace sxai {

/// Categorical naive Bayes with additive (Laplace/Lidstone) smoothing:
///   P(x_f = v | c) = (count(f, v, c) + alpha) / (count(c) + alpha * |domain f|)
/// Priors are the unsmoothed class frequencies, so classes absent from the
/// training data are never predicted.
class CategoricalNB final : public Classifier {
 public:
  // counts[f][c][v]
  using FeatureCounts = std::array<std::array<std::array<std::int64_t, 6>, kBehaviourCount>, kFeatureCount>;

  CategoricalNB(ClassCounts class_counts, FeatureCounts feature_counts, double alpha)
      : class_counts_(class_counts), feature_counts_(feature_counts), alpha_(alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw Error(Errc::invalid_alpha, "alpha must be positive and finite");
    double total = 0.0;
    for (auto n : class_counts_) total += static_cast<double>(n);
    if (total <= 0.0) throw Error(Errc::empty_dataset, "cannot train on an empty dataset");

    for (std::size_t c = 0; c < kBehaviourCount; ++c) {
      const auto n = static_cast<double>(class_counts_[c]);
      log_prior_[c] = n > 0.0 ? std::log(n / total) : -std::numeric_limits<double>::infinity();
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        const auto k = static_cast<double>(kDomainSizes[f]);
        for (std::size_t v = 0; v < kDomainSizes[f]; ++v)
          log_likelihood_[f][c][v] =
              std::log((static_cast<double>(feature_counts_[f][c][v]) + alpha_) / (n + alpha_ * k));
      }
    }
  }

  using Classifier::predict;

  std::string_view kind() const override { return "categorical_nb"; }

  Prediction predict(const Codes& x) const override {
    std::array<double, kBehaviourCount> log_post{};
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < kBehaviourCount; ++c) {
      log_post[c] = log_prior_[c];
      if (std::isinf(log_post[c])) continue;
      for (std::size_t f = 0; f < kFeatureCount; ++f) log_post[c] += log_likelihood_[f][c][x[f]];
      top = std::max(top, log_post[c]);
    }
    Probabilities p{};
    double z = 0.0;
    for (std::size_t c = 0; c < kBehaviourCount; ++c) {
      p[c] = std::isinf(log_post[c]) ? 0.0 : std::exp(log_post[c] - top);
      z += p[c];
    }
    for (auto& v : p) v /= z;
    return make_prediction(p);
  }

  nlohmann::json parameters() const override {
    return {{"alpha", alpha_}, {"class_counts", class_counts_}, {"feature_counts", feature_counts_}};
  }

  static CategoricalNB from_parameters(const nlohmann::json& j) {
    return CategoricalNB(j.at("class_counts").get<ClassCounts>(),
                         j.at("feature_counts").get<FeatureCounts>(), j.at("alpha").get<double>());
  }

  double alpha() const { return alpha_; }
  double log_prior(Behaviour c) const { return log_prior_[code_of(c)]; }

  /// Smoothed P(x_f = v | c) for every category v of feature f.
  std::vector<double> likelihoods(std::size_t feature, Behaviour c) const {
    std::vector<double> out;
    for (std::size_t v = 0; v < kDomainSizes[feature]; ++v)
      out.push_back(std::exp(log_likelihood_[feature][code_of(c)][v]));
    return out;
  }

 private:
  ClassCounts class_counts_;
  FeatureCounts feature_counts_;
  double alpha_;
  std::array<double, kBehaviourCount> log_prior_{};
  std::array<std::array<std::array<double, 6>, kBehaviourCount>, kFeatureCount> log_likelihood_{};
};

inline CategoricalNB train_categorical_nb(const StateCountTable& table, double alpha = 1.0) {
  ClassCounts class_counts{};
  CategoricalNB::FeatureCounts feature_counts{};
  for (std::size_t s = 0; s < kStateSpaceSize; ++s) {
    const auto x = codes_from_index(s);
    for (std::size_t c = 0; c < kBehaviourCount; ++c) {
      const auto n = table[s][c];
      class_counts[c] += n;
      for (std::size_t f = 0; f < kFeatureCount; ++f) feature_counts[f][c][x[f]] += n;
    }
  }
  return CategoricalNB(class_counts, feature_counts, alpha);
}

inline CategoricalNB train_categorical_nb(const Dataset& data, double alpha = 1.0) {
  if (data.empty()) throw Error(Errc::empty_dataset, "cannot train on an empty dataset");
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw Error(Errc::invalid_alpha, "alpha must be positive and finite");
  return train_categorical_nb(aggregate(data), alpha);
}

}  // namespace sxai
