#pragma once

// Model kinds, hyperparameters, and the model file format.

#include <fstream>
#include <sstream>
#include <string>
#include <variant>

#include "sxai/classifier.hpp"
#include "sxai/decision_tree.hpp"
#include "sxai/knn.hpp"
#include "sxai/naive_bayes.hpp"

namespace sxai {

enum class ModelKind { tree, nb, knn };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::tree: return "tree";
    case ModelKind::nb: return "nb";
    default: return "knn";
  }
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "tree" || s == "decision_tree") return ModelKind::tree;
  if (s == "nb" || s == "categorical_nb") return ModelKind::nb;
  if (s == "knn") return ModelKind::knn;
  throw Error(Errc::invalid_argument, "unknown model kind '" + std::string(s) + "'");
}

struct NbParams {
  double alpha = 1.0;
  bool operator==(const NbParams&) const = default;
};

struct KnnParams {
  int k = 5;
  bool operator==(const KnnParams&) const = default;
};

using HyperParams = std::variant<TreeParams, NbParams, KnnParams>;

inline ModelKind kind_of(const HyperParams& h) { return static_cast<ModelKind>(h.index()); }

inline HyperParams default_params(ModelKind k) {
  switch (k) {
    case ModelKind::tree: return TreeParams{};
    case ModelKind::nb: return NbParams{};
    default: return KnnParams{};
  }
}

inline nlohmann::json to_json(const HyperParams& h) {
  return std::visit(
      [](const auto& p) -> nlohmann::json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TreeParams>)
          return {{"max_depth", p.max_depth}, {"max_leaf_nodes", p.max_leaf_nodes}};
        else if constexpr (std::is_same_v<T, NbParams>)
          return {{"alpha", p.alpha}};
        else
          return {{"k", p.k}};
      },
      h);
}

inline std::string describe(const HyperParams& h) {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        std::ostringstream os;
        if constexpr (std::is_same_v<T, TreeParams>)
          os << "max_depth=" << p.max_depth << " max_leaf_nodes=" << p.max_leaf_nodes;
        else if constexpr (std::is_same_v<T, NbParams>)
          os << "alpha=" << p.alpha;
        else
          os << "k=" << p.k;
        return os.str();
      },
      h);
}

/// Trains the model described by `h` on the selected rows.
inline ClassifierPtr train_model(const Dataset& data, std::span<const std::size_t> rows,
                                 const HyperParams& h) {
  if (rows.empty()) throw Error(Errc::empty_dataset, "cannot train on an empty dataset");
  return std::visit(
      [&](const auto& p) -> ClassifierPtr {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TreeParams>)
          return std::make_shared<DecisionTree>(train_decision_tree(aggregate(data, rows), p));
        else if constexpr (std::is_same_v<T, NbParams>) {
          if (!(p.alpha > 0.0)) throw Error(Errc::invalid_alpha, "alpha must be positive");
          return std::make_shared<CategoricalNB>(train_categorical_nb(aggregate(data, rows), p.alpha));
        } else
          return std::make_shared<KnnModel>(train_knn(data, rows, p.k));
      },
      h);
}

inline ClassifierPtr train_model(const Dataset& data, const HyperParams& h) {
  const auto rows = all_rows(data);
  return train_model(data, rows, h);
}

// ---------------------------------------------------------------------------
// Model files

inline constexpr int kModelFormatVersion = 1;

/// A trained model plus the reference states used by the explainer.
struct ModelFile {
  ClassifierPtr model;
  std::vector<Codes> background;
};

inline nlohmann::json to_json(const ModelFile& m) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["model_kind"] = m.model->kind();
  j["vocabulary_hash"] = vocabulary_hash();
  j["parameters"] = m.model->parameters();
  j["background"] = m.background;
  return j;
}

inline ModelFile model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != kModelFormatVersion)
      throw Error(Errc::model_format, "unsupported model format version");
    if (j.at("vocabulary_hash").get<std::string>() != vocabulary_hash())
      throw Error(Errc::vocabulary_mismatch,
                  "model was trained under a different feature vocabulary");
    const auto kind = j.at("model_kind").get<std::string>();
    const auto& p = j.at("parameters");
    ModelFile m;
    if (kind == "decision_tree")
      m.model = std::make_shared<DecisionTree>(DecisionTree::from_parameters(p));
    else if (kind == "categorical_nb")
      m.model = std::make_shared<CategoricalNB>(CategoricalNB::from_parameters(p));
    else if (kind == "knn")
      m.model = std::make_shared<KnnModel>(KnnModel::from_parameters(p));
    else
      throw Error(Errc::model_format, "unknown model kind '" + kind + "'");
    m.background = j.at("background").get<std::vector<Codes>>();
    for (const auto& b : m.background) decode(b);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::model_format, e.what());
  }
}

inline void save_model(const std::string& path, const ModelFile& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write '" + path + "'");
  out << to_json(m).dump(1) << '\n';
}

inline ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::model_format, e.what());
  }
  return model_from_json(j);
}

}  // namespace sxai
