#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "fixtures.hpp"

using namespace sxai;
using fixtures::state;

namespace {

ConceptSet entry(std::string vessel, Behaviour b, std::vector<std::string> features, std::int64_t tick,
                 std::string mission = "m1") {
  ConceptSet cs;
  cs.vessel = std::move(vessel);
  cs.behaviour = b;
  for (const auto& f : features) {
    const auto i = require_feature(f);
    cs.causality.push_back({f, std::string(decode_category(i, 1)), 0.25});
  }
  cs.mission = std::move(mission);
  cs.tick = tick;
  cs.explanation_type = is_replanning(b) ? ExplanationType::replanning_clarification
                                         : ExplanationType::behaviour_causality;
  cs.confidence = 0.9;
  return cs;
}

Prediction certain(Behaviour b) {
  Probabilities p{};
  p[code_of(b)] = 1.0;
  return make_prediction(p);
}

bool is_subsequence(const std::vector<ConceptSet>& part, const std::vector<ConceptSet>& whole) {
  std::size_t j = 0;
  for (const auto& e : whole)
    if (j < part.size() && part[j] == e) ++j;
  return j == part.size();
}

}  // namespace

TEST(ConceptSet, ExplanationTypeFollowsBehaviour) {
  const CausalitySet causes{{{kObstacleFound, 1, 0.5}}};
  EXPECT_EQ(make_concept_set("heron", certain(Behaviour::avoid_obstacle), causes, 1).explanation_type,
            ExplanationType::replanning_clarification);
  EXPECT_EQ(make_concept_set("heron", certain(Behaviour::replanned_transit), causes, 1).explanation_type,
            ExplanationType::replanning_clarification);
  for (auto b : {Behaviour::wait, Behaviour::transit, Behaviour::survey, Behaviour::hold_position})
    EXPECT_EQ(make_concept_set("heron", certain(b), causes, 1).explanation_type,
              ExplanationType::behaviour_causality);
}

TEST(ConceptSet, CarriesContextAndConfidence) {
  const CausalitySet causes{{{kCurrentObjective, 3, 0.4}, {kSameObjective, 1, 0.1}}};
  auto p = certain(Behaviour::survey);
  p.probabilities = {0.0, 0.2, 0.8, 0.0, 0.0, 0.0};
  const auto cs = make_concept_set("heron", p, causes, 12, "m7");
  EXPECT_EQ(cs.vessel, "heron");
  EXPECT_EQ(cs.behaviour, Behaviour::survey);
  EXPECT_EQ(cs.mission, "m7");
  EXPECT_EQ(cs.tick, 12);
  EXPECT_DOUBLE_EQ(cs.confidence, 0.8);
  ASSERT_EQ(cs.causality.size(), 2u);
  EXPECT_EQ(cs.causality[0], (CauseEntry{"current_objective", "survey", 0.4}));
  EXPECT_EQ(cs.causality[1], (CauseEntry{"same_objective", "true", 0.1}));
}

TEST(ConceptSet, CounterfactualsAreWrapped) {
  const auto& m = fixtures::clean_tree();
  const auto r = counterfactual(*m.model, state(true, Objective::waypoint, Progress::transiting, true, false),
                                {{"obstacle_found", "true"}}, Background{m.background});
  const auto cs = make_counterfactual_concept_set("heron", r, 4, "m1");
  EXPECT_EQ(cs.explanation_type, ExplanationType::counterfactual);
  EXPECT_EQ(cs.behaviour, Behaviour::avoid_obstacle);
  ASSERT_EQ(cs.causality.size(), 1u);
  EXPECT_EQ(cs.causality[0].feature, "obstacle_found");
  EXPECT_EQ(cs.causality[0].value, "true");
}

TEST(ConceptSet, WireSchema) {
  const auto cs = entry("heron", Behaviour::avoid_obstacle, {"obstacle_found"}, 9);
  const auto j = nlohmann::json::parse(serialise(cs));
  EXPECT_EQ(j.at("vessel"), "heron");
  EXPECT_EQ(j.at("behaviour"), "avoid_obstacle");
  EXPECT_EQ(j.at("causality").at(0).at("feature"), "obstacle_found");
  EXPECT_EQ(j.at("causality").at(0).at("value"), "true");
  EXPECT_EQ(j.at("time").at("mission"), "m1");
  EXPECT_EQ(j.at("time").at("tick"), 9);
  EXPECT_EQ(j.at("explanation_type"), "replanning_clarification");
  EXPECT_EQ(j.at("confidence"), 0.9);
  EXPECT_EQ(parse_concept_set(serialise(cs)), cs);
}

TEST(ConceptSet, ParseRejectsBadEntries) {
  EXPECT_THROW(parse_concept_set("{"), Error);
  auto j = to_json(entry("heron", Behaviour::survey, {"current_objective"}, 1));
  j["confidence"] = 1.5;
  EXPECT_THROW(parse_concept_set(j.dump()), Error);
  j = to_json(entry("heron", Behaviour::survey, {"current_objective"}, 1));
  j.erase("vessel");
  EXPECT_THROW(parse_concept_set(j.dump()), Error);
  j = to_json(entry("heron", Behaviour::survey, {"current_objective"}, 1));
  j["causality"][0]["value"] = "sometimes";
  EXPECT_THROW(parse_concept_set(j.dump()), Error);
}

TEST(KnowledgeBase, RepeatedEntryIsDropped) {
  KnowledgeBase kb;
  EXPECT_TRUE(kb.append(entry("heron", Behaviour::transit, {"progress_type"}, 1)));
  EXPECT_FALSE(kb.append(entry("heron", Behaviour::transit, {"progress_type"}, 2)));
  EXPECT_TRUE(kb.append(entry("heron", Behaviour::avoid_obstacle, {"obstacle_found"}, 3)));
  EXPECT_TRUE(kb.append(entry("heron", Behaviour::transit, {"progress_type"}, 4)));
  EXPECT_EQ(kb.size(), 3u);
}

TEST(KnowledgeBase, CauseSetChangeIsStored) {
  KnowledgeBase kb;
  EXPECT_TRUE(kb.append(entry("heron", Behaviour::transit, {"progress_type"}, 1)));
  EXPECT_TRUE(kb.append(entry("heron", Behaviour::transit, {"progress_type", "current_objective"}, 2)));
  // Dedup compares the feature set, not the order or weights.
  auto again = entry("heron", Behaviour::transit, {"current_objective", "progress_type"}, 3);
  again.causality[0].weight = 0.9;
  EXPECT_FALSE(kb.append(again));
}

TEST(KnowledgeBase, DedupIsPerVessel) {
  KnowledgeBase kb;
  EXPECT_TRUE(kb.append(entry("heron", Behaviour::transit, {"progress_type"}, 1)));
  EXPECT_TRUE(kb.append(entry("philos", Behaviour::transit, {"progress_type"}, 1)));
  EXPECT_FALSE(kb.append(entry("heron", Behaviour::transit, {"progress_type"}, 2)));
}

TEST(KnowledgeBase, TimeRegression) {
  KnowledgeBase kb;
  kb.append(entry("heron", Behaviour::transit, {"progress_type"}, 5));
  for (std::int64_t t : {4, 5}) {
    try {
      kb.append(entry("heron", Behaviour::survey, {"current_objective"}, t));
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::time_regression);
    }
  }
  // Another vessel or another mission keeps its own clock.
  EXPECT_TRUE(kb.append(entry("philos", Behaviour::survey, {"current_objective"}, 1)));
  EXPECT_TRUE(kb.append(entry("heron", Behaviour::survey, {"current_objective"}, 1, "m2")));
}

TEST(KnowledgeBase, CounterfactualsAlwaysStored) {
  KnowledgeBase kb;
  auto live = entry("heron", Behaviour::transit, {"progress_type"}, 3);
  kb.append(live);
  auto cf = live;
  cf.explanation_type = ExplanationType::counterfactual;
  EXPECT_TRUE(kb.append(cf));
  EXPECT_TRUE(kb.append(cf));
  // The next live entry is still compared with the last live one.
  EXPECT_FALSE(kb.append(entry("heron", Behaviour::transit, {"progress_type"}, 4)));
  EXPECT_EQ(kb.size(), 3u);
}

TEST(KnowledgeBase, NoConsecutiveDuplicatesAfterPipeline) {
  KnowledgeBase kb;
  for (const auto& log : simulate(preset("trial", fixtures::kTrialSeed)))
    run_pipeline(fixtures::ambiguous_tree(), log, kb, {AttributionMethod::tree_path});
  std::map<std::pair<std::string, std::string>, ConceptSet> last;
  for (const auto& e : kb.entries()) {
    const auto key = std::pair{e.mission, e.vessel};
    if (const auto it = last.find(key); it != last.end()) {
      EXPECT_GT(e.tick, it->second.tick);
      EXPECT_FALSE(e.behaviour == it->second.behaviour && e.cause_features() == it->second.cause_features());
    }
    last[key] = e;
  }
}

TEST(KnowledgeBase, QueryFilters) {
  KnowledgeBase kb;
  kb.append(entry("heron", Behaviour::transit, {"progress_type"}, 1));
  kb.append(entry("philos", Behaviour::survey, {"current_objective"}, 2));
  kb.append(entry("heron", Behaviour::avoid_obstacle, {"obstacle_found"}, 3));
  kb.append(entry("heron", Behaviour::survey, {"current_objective"}, 7));
  const auto all = kb.entries();
  EXPECT_EQ(query(kb), all);

  const auto heron = kb.query({.vessel = "heron"});
  EXPECT_EQ(heron.size(), 3u);
  for (const auto& e : heron) EXPECT_EQ(e.vessel, "heron");

  const auto window = kb.query({.from_tick = 2, .to_tick = 3});
  ASSERT_EQ(window.size(), 2u);
  EXPECT_EQ(window[0].tick, 2);

  EXPECT_EQ(kb.query({.behaviour = Behaviour::survey}).size(), 2u);
  EXPECT_EQ(kb.query({.type = ExplanationType::replanning_clarification}).size(), 1u);
  for (const auto& q : {KnowledgeQuery{.vessel = "philos"}, KnowledgeQuery{.from_tick = 3},
                        KnowledgeQuery{.vessel = "heron", .behaviour = Behaviour::survey}})
    EXPECT_TRUE(is_subsequence(kb.query(q), all));
}

TEST(KnowledgeBase, ObstacleScenarioHasAvoidanceEntry) {
  KnowledgeBase kb;
  run_pipeline(fixtures::clean_tree(), scenario_replay(2), kb);
  const auto hits = kb.query({.behaviour = Behaviour::avoid_obstacle});
  ASSERT_FALSE(hits.empty());
  EXPECT_TRUE(hits.front().cause_features().contains("obstacle_found"));
}

TEST(KnowledgeBase, SerialisedLogRoundTrips) {
  const auto dir = fixtures::scratch_dir("kb-roundtrip");
  const auto path = (dir / "kb.jsonl").string();
  std::vector<ConceptSet> stored;
  {
    KnowledgeBase kb(path);
    for (const auto& log : simulate(preset("single", 8)))
      run_pipeline(fixtures::clean_tree(), log, kb);
    stored = kb.entries();
    std::istringstream in(kb.serialise_all());
    EXPECT_EQ(parse_knowledge(in), stored);
  }
  EXPECT_FALSE(stored.empty());
  EXPECT_EQ(load_knowledge(path), stored);
}

TEST(KnowledgeBase, ParseReportsLineNumber) {
  std::istringstream in(serialise(entry("heron", Behaviour::survey, {"current_objective"}, 1)) + "\nnot json\n");
  try {
    parse_knowledge(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.line(), 2);
  }
}

TEST(KnowledgeBase, ConcurrentReadersSeeConsistentPrefixes) {
  KnowledgeBase kb;
  constexpr int kEntries = 2000;
  std::atomic<bool> done{false};
  std::atomic<int> violations{0};
  std::vector<std::jthread> readers;
  for (int r = 0; r < 4; ++r)
    readers.emplace_back([&] {
      std::size_t seen = 0;
      while (!done) {
        const auto snapshot = kb.entries();
        if (snapshot.size() < seen) ++violations;
        seen = snapshot.size();
        for (std::size_t i = 0; i < snapshot.size(); ++i)
          if (snapshot[i].tick != static_cast<std::int64_t>(i)) ++violations;
      }
    });
  for (int t = 0; t < kEntries; ++t)
    kb.append(entry("heron", t % 2 ? Behaviour::transit : Behaviour::survey, {"progress_type"}, t));
  done = true;
  readers.clear();
  EXPECT_EQ(violations, 0);
  EXPECT_EQ(kb.size(), static_cast<std::size_t>(kEntries));
}
