#pragma once

// Confusion matrices, macro-averaged metrics, nested cross-validation and
// the model comparison report.

#include <chrono>
#include <future>
#include <iomanip>
#include <sstream>
#include <vector>

#include "sxai/dataset.hpp"
#include "sxai/models.hpp"

namespace sxai {

/// Square count matrix, rows = true class, columns = predicted class.
class CountMatrix {
 public:
  explicit CountMatrix(std::size_t n = kBehaviourCount) : n_(n), cells_(n * n, 0) {}

  CountMatrix(std::initializer_list<std::initializer_list<std::int64_t>> rows) : n_(rows.size()) {
    for (const auto& r : rows) {
      if (r.size() != n_) throw Error(Errc::invalid_argument, "matrix must be square");
      cells_.insert(cells_.end(), r.begin(), r.end());
    }
  }

  std::size_t size() const { return n_; }
  std::int64_t& at(std::size_t i, std::size_t j) { return cells_[i * n_ + j]; }
  std::int64_t at(std::size_t i, std::size_t j) const { return cells_[i * n_ + j]; }

  std::int64_t total() const {
    std::int64_t t = 0;
    for (auto v : cells_) t += v;
    return t;
  }

  CountMatrix& operator+=(const CountMatrix& o) {
    if (o.n_ != n_) throw Error(Errc::length_mismatch, "matrix sizes differ");
    for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i] += o.cells_[i];
    return *this;
  }

  std::vector<std::vector<std::int64_t>> rows() const {
    std::vector<std::vector<std::int64_t>> out(n_);
    for (std::size_t i = 0; i < n_; ++i)
      out[i].assign(cells_.begin() + static_cast<long>(i * n_),
                    cells_.begin() + static_cast<long>((i + 1) * n_));
    return out;
  }

  bool operator==(const CountMatrix&) const = default;

 private:
  std::size_t n_;
  std::vector<std::int64_t> cells_;
};

inline CountMatrix confusion_matrix(std::span<const std::uint8_t> truth,
                                    std::span<const std::uint8_t> predicted,
                                    std::size_t classes = kBehaviourCount) {
  if (truth.size() != predicted.size())
    throw Error(Errc::length_mismatch, "label vectors differ in length");
  CountMatrix cm(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= classes || predicted[i] >= classes)
      throw Error(Errc::invalid_argument, "label outside the class range");
    ++cm.at(truth[i], predicted[i]);
  }
  return cm;
}

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Classes present in the truth that were never predicted; their precision
  // counted as 0.
  std::vector<std::size_t> never_predicted;
};

/// Accuracy plus precision/recall/F1 macro-averaged over the classes present
/// in the truth. Zero denominators contribute 0.
inline Metrics classification_metrics(const CountMatrix& cm) {
  const auto total = cm.total();
  if (total <= 0) throw Error(Errc::empty_matrix, "confusion matrix is empty");
  const auto n = cm.size();
  Metrics m;
  std::int64_t trace = 0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < n; ++c) {
    trace += cm.at(c, c);
    std::int64_t row = 0, col = 0;
    for (std::size_t j = 0; j < n; ++j) {
      row += cm.at(c, j);
      col += cm.at(j, c);
    }
    if (row == 0) continue;
    ++present;
    const double p = col > 0 ? static_cast<double>(cm.at(c, c)) / static_cast<double>(col) : 0.0;
    const double r = static_cast<double>(cm.at(c, c)) / static_cast<double>(row);
    if (col == 0) m.never_predicted.push_back(c);
    m.precision += p;
    m.recall += r;
    m.f1 += (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  m.accuracy = static_cast<double>(trace) / static_cast<double>(total);
  m.precision /= static_cast<double>(present);
  m.recall /= static_cast<double>(present);
  m.f1 /= static_cast<double>(present);
  return m;
}

struct Evaluation {
  Metrics metrics;
  CountMatrix confusion;
};

inline std::vector<std::uint8_t> predict_rows(const Classifier& model, const Dataset& data,
                                              std::span<const std::size_t> rows) {
  std::vector<std::uint8_t> out;
  out.reserve(rows.size());
  for (auto i : rows) out.push_back(code_of(model.predict(data.features[i]).behaviour));
  return out;
}

inline Evaluation evaluate_on(const Classifier& model, const Dataset& data) {
  if (data.empty()) throw Error(Errc::empty_dataset, "cannot evaluate on an empty dataset");
  const auto rows = all_rows(data);
  const auto predicted = predict_rows(model, data, rows);
  auto cm = confusion_matrix(data.labels, predicted);
  return {classification_metrics(cm), std::move(cm)};
}

// ---------------------------------------------------------------------------
// Nested cross-validation

struct HyperGrid {
  std::vector<HyperParams> candidates;

  static HyperGrid defaults(ModelKind kind) {
    HyperGrid g;
    switch (kind) {
      case ModelKind::tree:
        for (int d : {2, 4, 6, 8, 10})
          for (int l : {8, 15, 31}) g.candidates.push_back(TreeParams{d, l});
        break;
      case ModelKind::nb:
        for (double a : {0.1, 0.5, 1.0}) g.candidates.push_back(NbParams{a});
        break;
      case ModelKind::knn:
        for (int k : {1, 3, 5, 7}) g.candidates.push_back(KnnParams{k});
        break;
    }
    return g;
  }
};

struct CvOptions {
  std::size_t outer_k = 5;
  std::size_t inner_k = 3;
  std::uint64_t seed = 0;
  bool parallel = true;
};

struct ModelReport {
  ModelKind kind = ModelKind::tree;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double fit_time = 0.0;    // seconds, summed over all fits
  double score_time = 0.0;  // seconds, summed over all scoring passes
  std::vector<HyperParams> selected;  // per outer fold
  std::vector<Metrics> fold_metrics;
  CountMatrix confusion;
  std::vector<std::size_t> never_predicted;  // classes never predicted in the pooled matrix
};

namespace detail {

struct FoldResult {
  HyperParams selected;
  Metrics metrics;
  CountMatrix confusion;
  double fit_time = 0.0;
  double score_time = 0.0;
};

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline std::vector<std::size_t> complement(std::span<const std::size_t> all,
                                           std::span<const std::size_t> excluded) {
  std::vector<std::size_t> out;
  std::ranges::set_difference(all, excluded, std::back_inserter(out));
  return out;
}

inline double accuracy_on(const Classifier& model, const Dataset& data,
                          std::span<const std::size_t> rows) {
  std::size_t hits = 0;
  for (auto i : rows) hits += code_of(model.predict(data.features[i]).behaviour) == data.labels[i];
  return rows.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(rows.size());
}

inline FoldResult run_outer_fold(const Dataset& data, const HyperGrid& grid,
                                 std::span<const std::size_t> train,
                                 std::span<const std::size_t> test, const CvOptions& opt,
                                 std::uint64_t fold_seed) {
  FoldResult r;
  const auto inner = stratified_folds(data.labels, train, opt.inner_k, fold_seed);

  double best = -1.0;
  for (const auto& h : grid.candidates) {
    double sum = 0.0;
    for (const auto& inner_test : inner) {
      const auto inner_train = complement(train, inner_test);
      auto t0 = Clock::now();
      const auto model = train_model(data, inner_train, h);
      r.fit_time += seconds_since(t0);
      t0 = Clock::now();
      sum += accuracy_on(*model, data, inner_test);
      r.score_time += seconds_since(t0);
    }
    const double mean = sum / static_cast<double>(inner.size());
    if (mean > best) {  // ties keep the earlier grid point
      best = mean;
      r.selected = h;
    }
  }

  auto t0 = Clock::now();
  const auto model = train_model(data, train, r.selected);
  r.fit_time += seconds_since(t0);
  t0 = Clock::now();
  const auto predicted = predict_rows(*model, data, test);
  r.score_time += seconds_since(t0);

  std::vector<std::uint8_t> truth;
  for (auto i : test) truth.push_back(data.labels[i]);
  r.confusion = confusion_matrix(truth, predicted);
  r.metrics = classification_metrics(r.confusion);
  return r;
}

}  // namespace detail

/// Outer stratified folds estimate performance; on each outer-train portion
/// an inner stratified CV picks the grid point with the best mean accuracy,
/// which is then refit on the whole outer-train portion.
inline ModelReport nested_cv(const Dataset& data, const HyperGrid& grid, const CvOptions& opt = {}) {
  if (grid.candidates.empty()) throw Error(Errc::invalid_argument, "hyperparameter grid is empty");
  if (data.empty()) throw Error(Errc::empty_dataset, "cannot cross-validate an empty dataset");
  const auto counts = class_counts(data);
  for (std::size_t c = 0; c < kBehaviourCount; ++c)
    if (counts[c] > 0 && counts[c] < opt.outer_k)
      throw Error(Errc::insufficient_class_count,
                  "class " + std::string(kBehaviourTokens[c]) + " has fewer rows than outer folds");

  const auto kind = kind_of(grid.candidates.front());
  const auto rows = all_rows(data);
  const auto outer = stratified_folds(data.labels, rows, opt.outer_k, opt.seed);

  std::vector<detail::FoldResult> results(outer.size());
  auto run = [&](std::size_t f) {
    const auto train = detail::complement(rows, outer[f]);
    return detail::run_outer_fold(data, grid, train, outer[f], opt, derive_seed(opt.seed, f + 1));
  };
  if (opt.parallel) {
    std::vector<std::future<detail::FoldResult>> jobs;
    for (std::size_t f = 0; f < outer.size(); ++f) jobs.push_back(std::async(std::launch::async, run, f));
    for (std::size_t f = 0; f < outer.size(); ++f) results[f] = jobs[f].get();
  } else {
    for (std::size_t f = 0; f < outer.size(); ++f) results[f] = run(f);
  }

  ModelReport rep;
  rep.kind = kind;
  for (const auto& r : results) {
    rep.accuracy += r.metrics.accuracy;
    rep.precision += r.metrics.precision;
    rep.recall += r.metrics.recall;
    rep.f1 += r.metrics.f1;
    rep.fit_time += r.fit_time;
    rep.score_time += r.score_time;
    rep.selected.push_back(r.selected);
    rep.fold_metrics.push_back(r.metrics);
    rep.confusion += r.confusion;
  }
  const auto k = static_cast<double>(results.size());
  rep.accuracy /= k;
  rep.precision /= k;
  rep.recall /= k;
  rep.f1 /= k;
  rep.never_predicted = classification_metrics(rep.confusion).never_predicted;
  return rep;
}

// ---------------------------------------------------------------------------
// Comparison report

inline nlohmann::json to_json(const Metrics& m) {
  return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
          {"never_predicted", m.never_predicted}};
}

inline nlohmann::json to_json(const ModelReport& r, bool include_timing = true) {
  nlohmann::json sel = nlohmann::json::array();
  for (const auto& h : r.selected) sel.push_back(to_json(h));
  nlohmann::json never = nlohmann::json::array();
  for (auto c : r.never_predicted) never.push_back(kBehaviourTokens[c]);
  nlohmann::json j = {{"model", to_string(r.kind)},
                      {"accuracy", r.accuracy},
                      {"precision", r.precision},
                      {"recall", r.recall},
                      {"f1", r.f1},
                      {"selected_hyperparameters", sel},
                      {"confusion_matrix", r.confusion.rows()},
                      {"never_predicted", never}};
  if (include_timing) {
    j["fit_time"] = r.fit_time;
    j["score_time"] = r.score_time;
  }
  return j;
}

inline nlohmann::json comparison_json(const std::vector<ModelReport>& reports, bool include_timing) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& r : reports) models.push_back(to_json(r, include_timing));
  nlohmann::json labels = nlohmann::json::array();
  for (auto b : kBehaviourTokens) labels.push_back(b);
  return {{"class_labels", labels}, {"models", models}};
}

inline std::string model_title(ModelKind k) {
  switch (k) {
    case ModelKind::tree: return "Decision Tree";
    case ModelKind::nb: return "CategoricalNB";
    default: return "KNN";
  }
}

/// Human-readable comparison table with one row per model.
inline std::string comparison_text(const std::vector<ModelReport>& reports, bool include_timing) {
  std::ostringstream os;
  os << std::left << std::setw(16) << "Model" << std::right << std::setw(10) << "Accuracy"
     << std::setw(11) << "Precision" << std::setw(9) << "Recall" << std::setw(10) << "F1-Score";
  if (include_timing) os << std::setw(11) << "Fit Time" << std::setw(12) << "Score Time";
  os << '\n' << std::fixed << std::setprecision(4);
  for (const auto& r : reports) {
    os << std::left << std::setw(16) << model_title(r.kind) << std::right << std::setw(10)
       << r.accuracy << std::setw(11) << r.precision << std::setw(9) << r.recall << std::setw(10)
       << r.f1;
    if (include_timing) os << std::setw(11) << r.fit_time << std::setw(12) << r.score_time;
    os << '\n';
  }
  for (const auto& r : reports) {
    if (r.never_predicted.empty()) continue;
    os << model_title(r.kind) << ": never predicted";
    for (auto c : r.never_predicted) os << ' ' << kBehaviourTokens[c];
    os << " (precision counted as 0)\n";
  }
  return os.str();
}

inline std::vector<ModelReport> compare_models(const Dataset& data, const CvOptions& opt = {}) {
  std::vector<ModelReport> out;
  for (auto kind : {ModelKind::tree, ModelKind::nb, ModelKind::knn})
    out.push_back(nested_cv(data, HyperGrid::defaults(kind), opt));
  return out;
}

}  // namespace sxai
