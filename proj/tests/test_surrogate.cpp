#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"

using namespace sxai;
using fixtures::state;

namespace {

void expect_simplex(const Prediction& p) {
  double sum = 0.0;
  for (auto v : p.probabilities) {
    EXPECT_GE(v, 0.0);
    sum += v;
  }
  EXPECT_NEAR(sum, 1.0, 1e-9);
  for (std::size_t c = 0; c < kBehaviourCount; ++c)
    EXPECT_LE(p.probabilities[c], p.probability(p.behaviour));
}

// Label depends only on current_objective.
Dataset objective_labelled() {
  std::vector<std::pair<VehicleState, Behaviour>> rows;
  for (const auto& s : enumerate_state_space()) {
    Behaviour b = Behaviour::wait;
    switch (s.current_objective) {
      case Objective::survey: b = Behaviour::survey; break;
      case Objective::hold: b = Behaviour::hold_position; break;
      case Objective::waypoint: b = Behaviour::transit; break;
      default: break;
    }
    rows.emplace_back(s, b);
  }
  return fixtures::make_dataset(rows);
}

// One binary feature x (ready_plan: a=false, b=true) and two classes.
Dataset nb_example() {
  const auto a = state(false, Objective::none, Progress::idle, false, false);
  const auto b = state(true, Objective::none, Progress::idle, false, false);
  return fixtures::make_dataset(
      {{a, Behaviour::wait}, {a, Behaviour::wait}, {b, Behaviour::transit}, {a, Behaviour::transit}});
}

}  // namespace

TEST(Gini, HandValues) {
  EXPECT_DOUBLE_EQ(gini(std::array<int, 6>{6, 0, 0, 0, 0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(gini(std::array<int, 6>{3, 3, 0, 0, 0, 0}), 0.5);
  EXPECT_DOUBLE_EQ(gini(std::array<int, 6>{2, 1, 1, 0, 0, 0}), 0.625);
  try {
    gini(std::array<int, 6>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_node);
  }
}

TEST(DecisionTree, SingleFeatureLabelIsLearntFromThatFeatureOnly) {
  const auto d = objective_labelled();
  const auto tree = train_decision_tree(d, TreeParams::unlimited());
  for (const auto& n : tree.nodes())
    if (!n.is_leaf()) {
      EXPECT_EQ(n.feature, static_cast<int>(kCurrentObjective));
    }
  EXPECT_LE(tree.depth(), static_cast<int>(kDomainSizes[kCurrentObjective]));
  EXPECT_DOUBLE_EQ(evaluate_on(tree, d).metrics.accuracy, 1.0);
}

TEST(DecisionTree, LeafAndDepthLimitsHold) {
  for (const auto* d : {&fixtures::clean_data(), &fixtures::ambiguous_data(), &fixtures::trial_data()}) {
    for (auto [depth, leaves] : {std::pair{8, 15}, {2, 31}, {4, 8}, {10, 3}}) {
      const auto tree = train_decision_tree(*d, depth, leaves);
      EXPECT_LE(tree.leaf_count(), static_cast<std::size_t>(leaves));
      EXPECT_LE(tree.depth(), depth);
    }
  }
}

TEST(DecisionTree, ParentCountsEqualChildSums) {
  const auto tree = train_decision_tree(fixtures::ambiguous_data(), TreeParams::unlimited());
  for (const auto& n : tree.nodes()) {
    if (n.is_leaf()) continue;
    const auto& l = tree.node(n.left);
    const auto& r = tree.node(n.right);
    for (std::size_t c = 0; c < kBehaviourCount; ++c) EXPECT_EQ(n.counts[c], l.counts[c] + r.counts[c]);
    EXPECT_EQ(l.depth, n.depth + 1);
  }
  std::int64_t root = 0;
  for (auto v : tree.node(0).counts) root += v;
  EXPECT_EQ(root, static_cast<std::int64_t>(fixtures::ambiguous_data().size()));
}

TEST(DecisionTree, TrainingIsDeterministic) {
  const auto& d = fixtures::ambiguous_data();
  EXPECT_EQ(train_decision_tree(d, 8, 15), train_decision_tree(d, 8, 15));
}

TEST(DecisionTree, UnlimitedTreeFitsConflictFreeData) {
  const auto& d = fixtures::clean_data();
  const auto tree = train_decision_tree(d, TreeParams::unlimited());
  EXPECT_DOUBLE_EQ(evaluate_on(tree, d).metrics.accuracy, 1.0);
}

TEST(DecisionTree, CleanTrainingAccuracy) {
  const auto& d = fixtures::clean_data();
  EXPECT_GE(evaluate_on(*fixtures::clean_tree().model, d).metrics.accuracy, 0.99);
}

TEST(DecisionTree, EmptyDataset) {
  try {
    train_decision_tree(Dataset{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_dataset);
  }
}

TEST(DecisionTree, PredictionsAreOnTheSimplex) {
  const auto& tree = *fixtures::ambiguous_tree().model;
  for (const auto& s : enumerate_state_space()) expect_simplex(tree.predict(s));
}

TEST(DecisionTree, LeafProportionIsTheProbability) {
  TreeNode leaf;
  leaf.counts = {0, 9, 0, 0, 0, 1};
  const DecisionTree tree({leaf}, {});
  const auto p = tree.predict(VehicleState{});
  EXPECT_EQ(p.behaviour, Behaviour::transit);
  EXPECT_DOUBLE_EQ(p.probability(Behaviour::transit), 0.9);
  EXPECT_TRUE(tree.decision_path(VehicleState{}).empty());
}

TEST(DecisionTree, ArgmaxTiesGoToLowestCode) {
  TreeNode leaf;
  leaf.counts = {0, 0, 4, 0, 4, 0};
  const DecisionTree tree({leaf}, {});
  EXPECT_EQ(tree.predict(VehicleState{}).behaviour, Behaviour::survey);
}

TEST(DecisionTree, ObstacleOnlySplitGivesOneStepPath) {
  std::vector<std::pair<VehicleState, Behaviour>> rows;
  for (int i = 0; i < 5; ++i) {
    rows.emplace_back(state(true, Objective::waypoint, Progress::transiting, true, false), Behaviour::transit);
    rows.emplace_back(state(true, Objective::waypoint, Progress::transiting, true, true), Behaviour::avoid_obstacle);
  }
  const auto tree = train_decision_tree(fixtures::make_dataset(rows));
  const auto path = tree.decision_path(state(true, Objective::waypoint, Progress::transiting, true, true));
  ASSERT_EQ(path.size(), 1u);
  EXPECT_EQ(path[0].feature, kObstacleFound);
}

TEST(DecisionTree, ObstacleDuringTransitPathUsesBothFeatures) {
  const auto& tree = dynamic_cast<const DecisionTree&>(*fixtures::clean_tree().model);
  std::set<std::size_t> features;
  for (const auto& step : decision_path(tree, state(true, Objective::waypoint, Progress::transiting, true, true)))
    features.insert(step.feature);
  EXPECT_TRUE(features.contains(kObstacleFound));
  EXPECT_TRUE(features.contains(kProgressType));
}

TEST(ModelFiles, RoundTripPreservesAllPredictions) {
  const auto& d = fixtures::ambiguous_data();
  for (const auto& h : std::vector<HyperParams>{TreeParams{8, 15}, NbParams{0.5}, KnnParams{3}}) {
    const auto m = build_model_file(d, h);
    const auto back = model_from_json(nlohmann::json::parse(to_json(m).dump()));
    EXPECT_EQ(back.model->kind(), m.model->kind());
    EXPECT_EQ(back.background, m.background);
    for (const auto& s : enumerate_state_space()) EXPECT_EQ(back.model->predict(s), m.model->predict(s));
  }
}

TEST(ModelFiles, SaveAndLoadThroughDisk) {
  const auto dir = fixtures::scratch_dir("model-io");
  const auto path = (dir / "model.json").string();
  save_model(path, fixtures::clean_tree());
  const auto back = load_model(path);
  for (const auto& s : enumerate_state_space())
    EXPECT_EQ(back.model->predict(s), fixtures::clean_tree().model->predict(s));
}

TEST(ModelFiles, VocabularyMismatchIsRefused) {
  auto j = to_json(fixtures::clean_tree());
  j["vocabulary_hash"] = "0000000000000000";
  try {
    model_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::vocabulary_mismatch);
  }
  auto k = to_json(fixtures::clean_tree());
  k.erase("parameters");
  EXPECT_THROW(model_from_json(k), Error);
}

TEST(NaiveBayes, SmoothedLikelihoodsAndPosterior) {
  const auto nb = train_categorical_nb(nb_example(), 1.0);
  EXPECT_NEAR(nb.likelihoods(kReadyPlan, Behaviour::wait)[0], 3.0 / 4.0, 1e-12);
  EXPECT_NEAR(nb.likelihoods(kReadyPlan, Behaviour::transit)[0], 1.0 / 2.0, 1e-12);
  const auto p = nb.predict(state(false, Objective::none, Progress::idle, false, false));
  EXPECT_EQ(p.behaviour, Behaviour::wait);
  EXPECT_NEAR(p.probability(Behaviour::wait), 0.6, 1e-12);
  EXPECT_NEAR(p.probability(Behaviour::transit), 0.4, 1e-12);
}

TEST(NaiveBayes, SingleClassPredictsItEverywhere) {
  std::vector<std::pair<VehicleState, Behaviour>> rows;
  for (const auto& s : enumerate_state_space()) rows.emplace_back(s, Behaviour::hold_position);
  const auto nb = train_categorical_nb(fixtures::make_dataset(rows));
  for (const auto& s : enumerate_state_space()) {
    const auto p = nb.predict(s);
    EXPECT_EQ(p.behaviour, Behaviour::hold_position);
    EXPECT_NEAR(p.confidence(), 1.0, 1e-9);
  }
}

TEST(NaiveBayes, LikelihoodRowsSumToOne) {
  for (double alpha : {0.1, 0.5, 1.0}) {
    const auto nb = train_categorical_nb(fixtures::ambiguous_data(), alpha);
    for (std::size_t f = 0; f < kFeatureCount; ++f)
      for (std::size_t c = 0; c < kBehaviourCount; ++c) {
        const auto l = nb.likelihoods(f, behaviour_from_code(c));
        ASSERT_EQ(l.size(), kDomainSizes[f]);
        EXPECT_NEAR(std::accumulate(l.begin(), l.end(), 0.0), 1.0, 1e-9);
      }
    for (const auto& s : enumerate_state_space()) expect_simplex(nb.predict(s));
  }
}

TEST(NaiveBayes, RejectsBadAlphaAndEmptyData) {
  for (double alpha : {0.0, -1.0, std::numeric_limits<double>::infinity()}) {
    try {
      train_categorical_nb(nb_example(), alpha);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::invalid_alpha);
    }
  }
  EXPECT_THROW(train_categorical_nb(Dataset{}, 1.0), Error);
}

TEST(Knn, HammingCountsDifferingFeatures) {
  EXPECT_EQ(hamming(state(true, Objective::survey, Progress::executing, true, false),
                    state(true, Objective::survey, Progress::transiting, true, false)),
            1);
  EXPECT_EQ(hamming(VehicleState{}, state(true, Objective::survey, Progress::executing, true, true)), 5);
}

TEST(Knn, ExactMatchWithKOne) {
  const auto& d = fixtures::clean_data();
  const auto knn = train_knn(d, 1);
  for (std::size_t i = 0; i < d.size(); i += 97) {
    // First occurrence of the row's state decides under the row-order tie rule.
    const auto first = std::ranges::find(d.features, d.features[i]) - d.features.begin();
    const auto p = knn.predict(d.features[i]);
    EXPECT_EQ(code_of(p.behaviour), d.labels[static_cast<std::size_t>(first)]);
    EXPECT_DOUBLE_EQ(p.confidence(), 1.0);
  }
}

TEST(Knn, VoteShares) {
  const auto q = state(true, Objective::waypoint, Progress::transiting, true, false);
  const auto far = state(false, Objective::none, Progress::idle, false, true);
  const auto d = fixtures::make_dataset({{q, Behaviour::transit},
                                         {far, Behaviour::wait},
                                         {q, Behaviour::transit},
                                         {q, Behaviour::survey}});
  const auto p = knn_predict(train_knn(d, 3), q);
  EXPECT_EQ(p.behaviour, Behaviour::transit);
  EXPECT_NEAR(p.probability(Behaviour::transit), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(p.probability(Behaviour::survey), 1.0 / 3.0, 1e-12);
}

TEST(Knn, DistanceTiesTakeEarlierRows) {
  const auto q = state(true, Objective::waypoint, Progress::transiting, true, false);
  auto a = q;
  a.obstacle_found = true;
  auto b = q;
  b.same_objective = false;
  // Both rows sit at distance 1; the earlier one wins with k = 1.
  EXPECT_EQ(knn_predict(train_knn(fixtures::make_dataset({{a, Behaviour::avoid_obstacle}, {b, Behaviour::transit}}), 1), q)
                .behaviour,
            Behaviour::avoid_obstacle);
  EXPECT_EQ(knn_predict(train_knn(fixtures::make_dataset({{b, Behaviour::transit}, {a, Behaviour::avoid_obstacle}}), 1), q)
                .behaviour,
            Behaviour::transit);
}

TEST(Knn, VoteTiesGoToLowerCode) {
  const auto q = state(true, Objective::survey, Progress::executing, true, false);
  const auto d = fixtures::make_dataset({{q, Behaviour::survey}, {q, Behaviour::transit}});
  EXPECT_EQ(knn_predict(train_knn(d, 2), q).behaviour, Behaviour::transit);
}

TEST(Knn, PredictionsMatchBruteForce) {
  const auto& d = fixtures::trial_data();
  for (int k : {1, 3, 5, 7}) {
    const auto knn = train_knn(d, k);
    for (const auto& s : enumerate_state_space()) {
      const auto x = encode(s);
      std::vector<std::pair<int, std::size_t>> order;
      for (std::size_t i = 0; i < d.size(); ++i) order.emplace_back(hamming(d.features[i], x), i);
      std::ranges::sort(order);
      ClassCounts votes{};
      for (int j = 0; j < k; ++j) ++votes[d.labels[order[static_cast<std::size_t>(j)].second]];
      const auto p = knn.predict(x);
      EXPECT_EQ(p, prediction_from_counts(votes));
      expect_simplex(p);
    }
  }
}

TEST(Knn, InvalidK) {
  const auto d = nb_example();
  for (int k : {0, -1, 5}) {
    try {
      train_knn(d, k);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::invalid_k);
    }
  }
}

TEST(Models, ConstantLabelsGiveConstantPredictions) {
  std::vector<std::pair<VehicleState, Behaviour>> rows;
  for (const auto& s : enumerate_state_space()) rows.emplace_back(s, Behaviour::survey);
  const auto d = fixtures::make_dataset(rows);
  for (const auto& h : std::vector<HyperParams>{TreeParams{}, NbParams{}, KnnParams{}}) {
    const auto m = train_model(d, h);
    for (const auto& s : enumerate_state_space()) EXPECT_EQ(m->predict(s).behaviour, Behaviour::survey);
  }
}
