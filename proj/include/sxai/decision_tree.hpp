#pragma once

// CART-style classification tree over categorical features, grown best-first
// so that `max_leaf_nodes` bounds the leaf count. Splits send an arbitrary
// subset of a feature's categories left; domains have at most six
// categories, so every binary partition is searched.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "sxai/classifier.hpp"
#include "sxai/error.hpp"

namespace sxai {

/// Gini impurity 1 - sum p_c^2.
template <typename Counts>
double gini(const Counts& counts) {
  double total = 0.0;
  for (auto c : counts) {
    if (c < 0) throw Error(Errc::invalid_argument, "negative class count");
    total += static_cast<double>(c);
  }
  if (total <= 0.0) throw Error(Errc::empty_node, "gini of an empty node");
  double sum_sq = 0.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / total;
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

struct TreeParams {
  int max_depth = 8;
  int max_leaf_nodes = 15;

  static constexpr int kUnlimited = 1 << 20;
  static TreeParams unlimited() { return {kUnlimited, kUnlimited}; }

  bool operator==(const TreeParams&) const = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  std::uint8_t left_mask = 0;  // bit c set: category c goes left
  int left = -1;
  int right = -1;
  int depth = 0;
  ClassCounts counts{};

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// One step of a root-to-leaf trace.
struct PathStep {
  std::size_t feature = 0;
  bool went_left = false;
  ClassCounts counts{};  // counts of the node that was split

  bool operator==(const PathStep&) const = default;
};

namespace detail {

inline double weighted_impurity(const ClassCounts& c) {
  double n = 0.0, sq = 0.0;
  for (auto v : c) {
    n += static_cast<double>(v);
    sq += static_cast<double>(v) * static_cast<double>(v);
  }
  return n > 0.0 ? n - sq / n : 0.0;
}

/// Lexicographic order of the sorted category lists encoded by two masks.
inline bool mask_lex_less(std::uint8_t a, std::uint8_t b) {
  while (a != 0 && b != 0) {
    const int ea = std::countr_zero(a), eb = std::countr_zero(b);
    if (ea != eb) return ea < eb;
    a &= static_cast<std::uint8_t>(a - 1);
    b &= static_cast<std::uint8_t>(b - 1);
  }
  return a == 0 && b != 0;
}

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  std::uint8_t mask = 0;
};

}  // namespace detail

class DecisionTree final : public Classifier {
 public:
  DecisionTree(std::vector<TreeNode> nodes, TreeParams params)
      : nodes_(std::move(nodes)), params_(params) {
    if (nodes_.empty()) throw Error(Errc::model_format, "tree has no nodes");
  }

  using Classifier::predict;

  std::string_view kind() const override { return "decision_tree"; }

  Prediction predict(const Codes& x) const override {
    return prediction_from_counts(nodes_[static_cast<std::size_t>(route(x))].counts);
  }

  nlohmann::json parameters() const override {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : nodes_)
      nodes.push_back({{"feature", n.feature}, {"left_mask", n.left_mask}, {"left", n.left},
                       {"right", n.right}, {"depth", n.depth}, {"counts", n.counts}});
    return {{"max_depth", params_.max_depth}, {"max_leaf_nodes", params_.max_leaf_nodes},
            {"nodes", nodes}};
  }

  static DecisionTree from_parameters(const nlohmann::json& j) {
    std::vector<TreeNode> nodes;
    for (const auto& n : j.at("nodes")) {
      TreeNode t;
      t.feature = n.at("feature").get<int>();
      t.left_mask = n.at("left_mask").get<std::uint8_t>();
      t.left = n.at("left").get<int>();
      t.right = n.at("right").get<int>();
      t.depth = n.at("depth").get<int>();
      t.counts = n.at("counts").get<ClassCounts>();
      nodes.push_back(t);
    }
    const auto size = static_cast<int>(nodes.size());
    for (const auto& n : nodes)
      if (!n.is_leaf() && (n.feature >= static_cast<int>(kFeatureCount) || n.left <= 0 ||
                           n.right <= 0 || n.left >= size || n.right >= size))
        throw Error(Errc::model_format, "malformed tree node");
    return DecisionTree(std::move(nodes), {j.at("max_depth").get<int>(),
                                           j.at("max_leaf_nodes").get<int>()});
  }

  /// Index of the leaf reached by `x`.
  int route(const Codes& x) const {
    int i = 0;
    while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
      const auto& n = nodes_[static_cast<std::size_t>(i)];
      i = (n.left_mask >> x[static_cast<std::size_t>(n.feature)]) & 1u ? n.left : n.right;
    }
    return i;
  }

  std::vector<PathStep> decision_path(const Codes& x) const {
    std::vector<PathStep> path;
    int i = 0;
    while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
      const auto& n = nodes_[static_cast<std::size_t>(i)];
      const bool left = (n.left_mask >> x[static_cast<std::size_t>(n.feature)]) & 1u;
      path.push_back({static_cast<std::size_t>(n.feature), left, n.counts});
      i = left ? n.left : n.right;
    }
    return path;
  }

  std::vector<PathStep> decision_path(const VehicleState& s) const { return decision_path(encode(s)); }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const TreeParams& params() const { return params_; }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::ranges::count_if(nodes_, &TreeNode::is_leaf));
  }

  int depth() const {
    int d = 0;
    for (const auto& n : nodes_) d = std::max(d, n.depth);
    return d;
  }

  bool operator==(const DecisionTree& o) const { return nodes_ == o.nodes_ && params_ == o.params_; }

 private:
  std::vector<TreeNode> nodes_;
  TreeParams params_;
};

namespace detail {

/// Best split of a node holding the given distinct states.
inline SplitCandidate best_split(const StateCountTable& table, const std::vector<std::size_t>& states,
                                 const ClassCounts& node_counts) {
  SplitCandidate best;
  const double parent = weighted_impurity(node_counts);
  constexpr double kTie = 1e-9;

  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const auto k = kDomainSizes[f];
    std::array<ClassCounts, 6> per_cat{};
    std::uint8_t present = 0;
    for (auto s : states) {
      const auto cat = codes_from_index(s)[f];
      for (std::size_t c = 0; c < kBehaviourCount; ++c) per_cat[cat][c] += table[s][c];
      present |= static_cast<std::uint8_t>(1u << cat);
    }
    if (std::popcount(present) < 2) continue;

    const unsigned full = (1u << k) - 1;
    for (unsigned m = 1; m < full; ++m) {
      const auto mask = static_cast<std::uint8_t>(m);
      if ((mask & present) == 0 || (static_cast<std::uint8_t>(~mask) & present) == 0) continue;
      ClassCounts left{}, right{};
      for (std::size_t cat = 0; cat < k; ++cat) {
        auto& side = ((m >> cat) & 1u) ? left : right;
        for (std::size_t c = 0; c < kBehaviourCount; ++c) side[c] += per_cat[cat][c];
      }
      const double gain = parent - weighted_impurity(left) - weighted_impurity(right);
      const bool better =
          best.feature < 0 || gain > best.gain + kTie ||
          (gain >= best.gain - kTie &&
           (static_cast<int>(f) < best.feature ||
            (static_cast<int>(f) == best.feature && mask_lex_less(mask, best.mask))));
      if (better) best = {gain, static_cast<int>(f), mask};
    }
  }
  return best;
}

}  // namespace detail

/// Grows a tree from per-state class counts.
inline DecisionTree train_decision_tree(const StateCountTable& table, TreeParams params = {}) {
  if (params.max_depth < 0 || params.max_leaf_nodes < 1)
    throw Error(Errc::invalid_argument, "max_depth must be >= 0 and max_leaf_nodes >= 1");

  TreeNode root;
  std::vector<std::size_t> root_states;
  for (std::size_t s = 0; s < kStateSpaceSize; ++s) {
    const auto n = std::accumulate(table[s].begin(), table[s].end(), std::int64_t{0});
    if (n == 0) continue;
    root_states.push_back(s);
    for (std::size_t c = 0; c < kBehaviourCount; ++c) root.counts[c] += table[s][c];
  }
  if (root_states.empty()) throw Error(Errc::empty_dataset, "cannot train on an empty dataset");

  constexpr double kMinGain = 1e-9;
  std::vector<TreeNode> nodes{root};
  std::vector<std::vector<std::size_t>> members{root_states};
  std::vector<detail::SplitCandidate> candidates{detail::best_split(table, root_states, root.counts)};
  std::size_t leaves = 1;

  while (leaves < static_cast<std::size_t>(params.max_leaf_nodes)) {
    int chosen = -1;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      const auto& cand = candidates[i];
      if (!n.is_leaf() || n.depth >= params.max_depth || cand.feature < 0 || cand.gain <= kMinGain)
        continue;
      if (chosen < 0 || cand.gain > candidates[static_cast<std::size_t>(chosen)].gain + kMinGain)
        chosen = static_cast<int>(i);
    }
    if (chosen < 0) break;

    const auto ci = static_cast<std::size_t>(chosen);
    const auto split = candidates[ci];
    std::vector<std::size_t> left_states, right_states;
    TreeNode left, right;
    left.depth = right.depth = nodes[ci].depth + 1;
    for (auto s : members[ci]) {
      const auto cat = codes_from_index(s)[static_cast<std::size_t>(split.feature)];
      const bool go_left = (split.mask >> cat) & 1u;
      (go_left ? left_states : right_states).push_back(s);
      auto& side = go_left ? left : right;
      for (std::size_t c = 0; c < kBehaviourCount; ++c) side.counts[c] += table[s][c];
    }

    nodes[ci].feature = split.feature;
    nodes[ci].left_mask = split.mask;
    nodes[ci].left = static_cast<int>(nodes.size());
    nodes[ci].right = static_cast<int>(nodes.size() + 1);
    members[ci].clear();

    candidates.push_back(detail::best_split(table, left_states, left.counts));
    candidates.push_back(detail::best_split(table, right_states, right.counts));
    nodes.push_back(left);
    nodes.push_back(right);
    members.push_back(std::move(left_states));
    members.push_back(std::move(right_states));
    ++leaves;
  }
  return DecisionTree(std::move(nodes), params);
}

inline DecisionTree train_decision_tree(const Dataset& data, TreeParams params = {}) {
  if (data.empty()) throw Error(Errc::empty_dataset, "cannot train on an empty dataset");
  return train_decision_tree(aggregate(data), params);
}

inline DecisionTree train_decision_tree(const Dataset& data, int max_depth, int max_leaf_nodes) {
  return train_decision_tree(data, TreeParams{max_depth, max_leaf_nodes});
}

inline std::vector<PathStep> decision_path(const DecisionTree& tree, const VehicleState& s) {
  return tree.decision_path(s);
}

}  // namespace sxai
