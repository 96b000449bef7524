#pragma once

// End-to-end workflow: for each incoming state, predict, attribute, infer
// causality, build a concept set, append it to the knowledge base, and
// realise the stored entries as sentences.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sxai/explain.hpp"
#include "sxai/knowledge.hpp"
#include "sxai/models.hpp"
#include "sxai/realiser.hpp"
#include "sxai/simulator.hpp"

namespace sxai {

/// Trains a model and records its deduplicated training states as the
/// explainer background.
inline ModelFile build_model_file(const Dataset& data, const HyperParams& h,
                                  std::size_t background_cap = 512, std::uint64_t seed = 0) {
  ModelFile m;
  m.model = train_model(data, h);
  m.background = make_background(data.features, background_cap, seed).rows;
  return m;
}

struct PipelineOptions {
  AttributionMethod method = AttributionMethod::shapley;
  double threshold = kCausalityThreshold;
};

struct FeedItem {
  ConceptSet entry;
  std::string sentence;
  VehicleState state;
  std::optional<Behaviour> observed;  // label of the source record, if any
  Attribution attribution;

  bool mispredicted() const { return observed && *observed != entry.behaviour; }
};

inline nlohmann::json to_json(const FeedItem& item) {
  auto j = to_json(item.entry);
  j["sentence"] = item.sentence;
  return j;
}

/// Explains one state: prediction, attribution, causality, concept set.
struct Explanation {
  Prediction prediction;
  Attribution attribution;
  CausalitySet causality;
  ConceptSet entry;
  std::string sentence;
};

inline Explanation explain_state(const ModelFile& model, const VehicleState& state,
                                 const PipelineOptions& opt, std::string vessel = std::string(kSurveyorVessel),
                                 std::int64_t tick = 0, std::string mission = {}) {
  Explanation e;
  const auto x = encode(state);
  e.prediction = model.model->predict(x);
  e.attribution = attribute(*model.model, x, Background{model.background}, opt.method);
  e.causality = infer_causality(e.attribution, x, opt.threshold);
  e.entry = make_concept_set(std::move(vessel), e.prediction, e.causality, tick, std::move(mission));
  e.sentence = realise(e.entry);
  return e;
}

/// Stateful per-mission processor. Not thread-safe; one producer per mission.
class MissionPipeline {
 public:
  MissionPipeline(const ModelFile& model, KnowledgeBase& kb, std::string mission,
                  PipelineOptions opt = {})
      : model_(model), background_{model.background}, kb_(kb), mission_(std::move(mission)), opt_(opt) {}

  /// Processes one record; returns the feed item when the entry was stored.
  std::optional<FeedItem> step(const StateRecord& r) {
    const auto x = encode(r.state);
    const auto prediction = model_.model->predict(x);
    const auto attribution = attribute(*model_.model, x, background_, opt_.method);
    const auto causes = infer_causality(attribution, x, opt_.threshold);
    auto entry = make_concept_set(r.vessel, prediction, causes, r.tick, mission_);
    if (!kb_.append(entry)) return std::nullopt;
    FeedItem item{entry, realise(entry), r.state, r.behaviour, attribution};
    return item;
  }

 private:
  const ModelFile& model_;
  Background background_;
  KnowledgeBase& kb_;
  std::string mission_;
  PipelineOptions opt_;
};

struct PipelineResult {
  std::vector<FeedItem> feed;
  std::size_t records = 0;
};

/// Runs a whole log through the pipeline. `on_item` sees each stored entry
/// as it is produced.
inline PipelineResult run_pipeline(const ModelFile& model, const StateLog& source, KnowledgeBase& kb,
                                   const PipelineOptions& opt = {},
                                   const std::function<void(const FeedItem&)>& on_item = {}) {
  PipelineResult result;
  MissionPipeline pipeline(model, kb, source.mission, opt);
  for (const auto& r : source.records) {
    ++result.records;
    if (auto item = pipeline.step(r)) {
      if (on_item) on_item(*item);
      result.feed.push_back(std::move(*item));
    }
  }
  return result;
}

/// Cuts a flat record list into missions wherever a vessel's tick fails to
/// increase. Missions are named `<prefix>-<n>`.
inline std::vector<StateLog> split_missions(const std::vector<StateRecord>& records,
                                            const std::string& prefix) {
  std::vector<StateLog> out;
  std::map<std::string, std::int64_t> last;
  for (const auto& r : records) {
    const auto it = last.find(r.vessel);
    if (out.empty() || (it != last.end() && r.tick <= it->second)) {
      out.push_back({prefix + "-" + std::to_string(out.size() + 1), {}});
      last.clear();
    }
    out.back().records.push_back(r);
    last[r.vessel] = r.tick;
  }
  return out;
}

}  // namespace sxai
