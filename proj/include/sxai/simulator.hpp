#pragma once

// Deterministic two-vessel mission simulator. The surveyor ("heron") executes
// the plan; the scout ("philos") only contributes obstacle reports, which are
// folded into the surveyor's state. Every emitted record is labelled with the
// reference behaviour-activation policy evaluated on the true state.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sxai/domain.hpp"
#include "sxai/error.hpp"
#include "sxai/rng.hpp"

namespace sxai {

inline constexpr std::string_view kSurveyorVessel = "heron";
inline constexpr std::string_view kScoutVessel = "philos";

/// One observed tick. `behaviour` is empty in unlabelled streams.
struct StateRecord {
  std::string vessel;
  std::int64_t tick = 0;
  VehicleState state;
  std::optional<Behaviour> behaviour;

  bool operator==(const StateRecord&) const = default;
};

struct StateLog {
  std::string mission;
  std::vector<StateRecord> records;

  bool operator==(const StateLog&) const = default;
};

struct PlanObjective {
  Objective kind = Objective::survey;
  int transit_ticks = 1;
  int duration = 1;
  int idle_after = 0;

  bool operator==(const PlanObjective&) const = default;
};

/// Obstacle on the transit leg of objective `objective`, starting `offset`
/// ticks into the leg. Avoidance lasts `length` ticks, replanning `replan_ticks`.
struct StaticObstacle {
  std::size_t objective = 0;
  int offset = 1;
  int length = 1;
  int replan_ticks = 1;

  bool operator==(const StaticObstacle&) const = default;
};

/// Scout report at an absolute mission tick. Reports that do not land on a
/// transit leg with enough room left are ignored by the surveyor.
struct DynamicObstacle {
  std::int64_t tick = 0;
  int length = 1;
  int replan_ticks = 1;

  bool operator==(const DynamicObstacle&) const = default;
};

struct MissionPlan {
  std::string id = "mission";
  std::uint64_t seed = 0;
  int prelaunch_ticks = 1;
  std::vector<PlanObjective> objectives;
  std::vector<StaticObstacle> static_obstacles;
  std::vector<DynamicObstacle> dynamic_obstacles;
  int completed_ticks = 1;

  bool operator==(const MissionPlan&) const = default;
};

struct SimConfig {
  std::uint64_t seed = 0;
  int mission_count = 1;
  int mean_mission_ticks = 1350;
  double label_noise_rate = 0.0;
  double ambiguity_rate = 0.0;
};

// ---------------------------------------------------------------------------
// Reference policy

/// Expert behaviour-activation rules; the first matching rule wins.
constexpr Behaviour reference_policy(const VehicleState& s) {
  if (!s.ready_plan) return Behaviour::wait;
  if (s.obstacle_found && s.progress_type == Progress::transiting) return Behaviour::avoid_obstacle;
  if (s.progress_type == Progress::replanning) return Behaviour::replanned_transit;
  if (s.progress_type == Progress::transiting) return Behaviour::transit;
  if (s.progress_type == Progress::executing) {
    if (!s.same_objective) return Behaviour::transit;
    if (s.current_objective == Objective::survey) return Behaviour::survey;
    if (s.current_objective == Objective::hold || s.current_objective == Objective::launch ||
        s.current_objective == Objective::recovery)
      return Behaviour::hold_position;
  }
  return Behaviour::wait;
}

// ---------------------------------------------------------------------------
// Plans

inline void validate_plan(const MissionPlan& plan) {
  if (plan.objectives.empty()) throw Error(Errc::invalid_plan, "plan has no objectives");
  if (plan.objectives.front().kind != Objective::launch)
    throw Error(Errc::invalid_plan, "first objective must be launch");
  if (plan.objectives.back().kind != Objective::recovery)
    throw Error(Errc::invalid_plan, "last objective must be recovery");
  for (const auto& o : plan.objectives) {
    if (o.kind == Objective::none) throw Error(Errc::invalid_plan, "objective kind 'none'");
    if (o.duration < 1 || o.transit_ticks < 1 || o.idle_after < 0)
      throw Error(Errc::invalid_plan, "objective durations must be >= 1");
  }
  if (plan.prelaunch_ticks < 1 || plan.completed_ticks < 1)
    throw Error(Errc::invalid_plan, "prelaunch and completion phases must last >= 1 tick");
  for (const auto& ob : plan.static_obstacles) {
    if (ob.objective >= plan.objectives.size())
      throw Error(Errc::invalid_plan, "static obstacle refers to a missing objective");
    const auto& leg = plan.objectives[ob.objective];
    if (ob.offset < 1 || ob.length < 1 || ob.replan_ticks < 0 ||
        ob.offset + ob.length + ob.replan_ticks > leg.transit_ticks)
      throw Error(Errc::invalid_plan, "static obstacle does not fit its transit leg");
  }
}

/// First tick of each objective's transit leg.
inline std::vector<std::int64_t> transit_starts(const MissionPlan& plan) {
  std::vector<std::int64_t> starts;
  std::int64_t t = plan.prelaunch_ticks;
  for (const auto& o : plan.objectives) {
    starts.push_back(t);
    t += o.transit_ticks + o.duration + o.idle_after;
  }
  return starts;
}

namespace detail {

inline std::pair<int, int> duration_range(Objective kind) {
  switch (kind) {
    case Objective::survey: return {150, 400};
    case Objective::hold: return {60, 180};
    case Objective::waypoint: return {1, 3};
    default: return {15, 40};  // launch, recovery
  }
}

}  // namespace detail

/// Wraps `kinds` with launch/recovery when absent and draws durations and
/// obstacle events from `seed`, scaled so the mission lasts about
/// `mean_ticks` ticks.
inline MissionPlan build_mission(std::vector<Objective> kinds, std::uint64_t seed,
                                 int mean_ticks = 1350) {
  if (kinds.empty()) throw Error(Errc::invalid_plan, "objective list is empty");
  if (std::ranges::find(kinds, Objective::none) != kinds.end())
    throw Error(Errc::invalid_plan, "objective kind 'none'");
  if (kinds.front() != Objective::launch) kinds.insert(kinds.begin(), Objective::launch);
  if (kinds.back() != Objective::recovery) kinds.push_back(Objective::recovery);

  Rng rng(seed);
  MissionPlan plan;
  plan.id = "mission-" + std::to_string(seed);
  plan.seed = seed;
  plan.prelaunch_ticks = static_cast<int>(rng.uniform_int(10, 40));
  plan.completed_ticks = static_cast<int>(rng.uniform_int(5, 20));

  double scalable = 0.0;
  for (auto kind : kinds) {
    PlanObjective o;
    o.kind = kind;
    o.transit_ticks = static_cast<int>(rng.uniform_int(40, 120));
    const auto [lo, hi] = detail::duration_range(kind);
    o.duration = static_cast<int>(rng.uniform_int(lo, hi));
    o.idle_after = rng.bernoulli(0.5) ? static_cast<int>(rng.uniform_int(1, 8)) : 0;
    scalable += o.transit_ticks + (kind == Objective::waypoint ? 0 : o.duration);
    plan.objectives.push_back(o);
  }

  // Scale transit legs and long objectives towards the requested length.
  const double fixed = plan.prelaunch_ticks + plan.completed_ticks;
  const double target = std::max(1.0, mean_ticks * (0.8 + 0.4 * rng.uniform()) - fixed);
  const double scale = target / scalable;
  for (auto& o : plan.objectives) {
    o.transit_ticks = std::max(2, static_cast<int>(o.transit_ticks * scale + 0.5));
    if (o.kind != Objective::waypoint)
      o.duration = std::max(1, static_cast<int>(o.duration * scale + 0.5));
  }

  std::vector<bool> leg_busy(plan.objectives.size(), false);
  for (std::size_t i = 0; i < plan.objectives.size(); ++i) {
    const bool want = rng.bernoulli(0.35);
    const int length = static_cast<int>(rng.uniform_int(5, 20));
    const int replan = static_cast<int>(rng.uniform_int(5, 20));
    const int room = plan.objectives[i].transit_ticks - length - replan;
    if (!want || room < 2) continue;
    const int offset = static_cast<int>(rng.uniform_int(1, room - 1));
    plan.static_obstacles.push_back({i, offset, length, replan});
    leg_busy[i] = true;
  }

  const auto starts = transit_starts(plan);
  const int events = static_cast<int>(rng.uniform_int(1, 2));
  for (int e = 0; e < events; ++e) {
    const auto i = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(plan.objectives.size()) - 1));
    const int length = static_cast<int>(rng.uniform_int(5, 15));
    const int replan = static_cast<int>(rng.uniform_int(5, 15));
    const int room = plan.objectives[i].transit_ticks - length - replan;
    if (leg_busy[i] || room < 2) continue;
    const int offset = static_cast<int>(rng.uniform_int(1, room - 1));
    plan.dynamic_obstacles.push_back({starts[i] + offset, length, replan});
    leg_busy[i] = true;
  }
  std::ranges::sort(plan.dynamic_obstacles, {}, &DynamicObstacle::tick);
  return plan;
}

// ---------------------------------------------------------------------------
// Execution

/// True (noise-free) surveyor state at every tick of the plan.
inline std::vector<VehicleState> true_timeline(const MissionPlan& plan) {
  validate_plan(plan);
  std::vector<VehicleState> out;

  for (int t = 0; t < plan.prelaunch_ticks; ++t)
    out.push_back({false, Objective::none, Progress::idle, true, false});

  // Obstacle windows per leg, as (offset, length, replan).
  std::vector<std::vector<StaticObstacle>> windows(plan.objectives.size());
  for (const auto& ob : plan.static_obstacles) windows[ob.objective].push_back(ob);
  const auto starts = transit_starts(plan);
  for (const auto& ev : plan.dynamic_obstacles) {
    for (std::size_t i = 0; i < plan.objectives.size(); ++i) {
      const auto offset = ev.tick - starts[i];
      if (offset < 1 || offset + ev.length + ev.replan_ticks > plan.objectives[i].transit_ticks)
        continue;
      windows[i].push_back({i, static_cast<int>(offset), ev.length, ev.replan_ticks});
    }
  }

  bool previous_executing = false;
  for (std::size_t i = 0; i < plan.objectives.size(); ++i) {
    const auto& o = plan.objectives[i];
    for (int j = 0; j < o.transit_ticks; ++j) {
      VehicleState s{true, o.kind, Progress::transiting, j != 0, false};
      // On the switch tick the autonomy still reports the finished execution.
      if (j == 0 && previous_executing) s.progress_type = Progress::executing;
      for (const auto& w : windows[i]) {
        if (j >= w.offset && j < w.offset + w.length) {
          s.obstacle_found = true;
        } else if (j >= w.offset + w.length && j < w.offset + w.length + w.replan_ticks) {
          s.progress_type = Progress::replanning;
        }
      }
      out.push_back(s);
    }
    for (int j = 0; j < o.duration; ++j)
      out.push_back({true, o.kind, Progress::executing, true, false});
    for (int j = 0; j < o.idle_after; ++j)
      out.push_back({true, o.kind, Progress::idle, true, false});
    previous_executing = o.idle_after == 0;
  }

  for (int t = 0; t < plan.completed_ticks; ++t)
    out.push_back({true, plan.objectives.back().kind, Progress::completed, true, false});
  return out;
}

/// Runs the plan tick by tick. With `ambiguity_rate` the emitted record
/// carries the previous phase's progress_type (while the label follows the
/// true state) whenever that changes the policy outcome; with
/// `label_noise_rate` the label is redrawn uniformly.
inline StateLog run_mission(const MissionPlan& plan, const SimConfig& config) {
  if (config.ambiguity_rate < 0.0 || config.ambiguity_rate > 1.0 || config.label_noise_rate < 0.0 ||
      config.label_noise_rate > 1.0)
    throw Error(Errc::invalid_argument, "rates must lie in [0, 1]");
  const auto truth = true_timeline(plan);

  Rng rng(derive_seed(config.seed, plan.seed));
  StateLog log;
  log.mission = plan.id;
  log.records.reserve(truth.size());

  std::optional<Progress> previous_phase;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (t > 0 && truth[t].progress_type != truth[t - 1].progress_type)
      previous_phase = truth[t - 1].progress_type;

    // Draws happen unconditionally so streams stay aligned across rates.
    const double ambiguity_draw = rng.uniform();
    const double noise_draw = rng.uniform();
    const auto noise_label = rng.uniform_int(0, kBehaviourCount - 1);

    VehicleState emitted = truth[t];
    Behaviour label = reference_policy(truth[t]);
    if (ambiguity_draw < config.ambiguity_rate && previous_phase) {
      VehicleState stale = truth[t];
      stale.progress_type = *previous_phase;
      if (reference_policy(stale) != label) emitted = stale;
    }
    if (noise_draw < config.label_noise_rate) label = behaviour_from_code(noise_label);

    log.records.push_back({std::string(kSurveyorVessel), static_cast<std::int64_t>(t), emitted,
                           label});
  }
  return log;
}

/// Random objective list for generated missions: one to four survey, hold or
/// waypoint objectives.
inline std::vector<Objective> random_objectives(std::uint64_t seed) {
  Rng rng(seed);
  static constexpr std::array<Objective, 5> kPool{Objective::survey, Objective::survey,
                                                  Objective::hold, Objective::waypoint,
                                                  Objective::survey};
  std::vector<Objective> kinds(static_cast<std::size_t>(rng.uniform_int(1, 4)));
  for (auto& k : kinds) k = kPool[static_cast<std::size_t>(rng.uniform_int(0, kPool.size() - 1))];
  return kinds;
}

/// Generates `config.mission_count` missions; mission i uses a sub-seed of
/// `config.seed`.
inline std::vector<StateLog> simulate(const SimConfig& config) {
  std::vector<StateLog> logs;
  for (int m = 0; m < config.mission_count; ++m) {
    const auto mission_seed = derive_seed(config.seed, static_cast<std::uint64_t>(m));
    auto plan = build_mission(random_objectives(mission_seed), mission_seed,
                              config.mean_mission_ticks);
    plan.id = "m" + std::to_string(config.seed) + "-" + std::to_string(m);
    logs.push_back(run_mission(plan, config));
  }
  return logs;
}

/// Named generation presets. "paper-scale" is ten missions of ~1350 ticks;
/// "trial" is a smaller independent run used as a held-out log.
inline SimConfig preset(std::string_view name, std::uint64_t seed) {
  SimConfig c;
  c.seed = seed;
  if (name == "paper-scale") {
    c.mission_count = 10;
  } else if (name == "trial") {
    c.mission_count = 2;
  } else if (name != "single") {
    throw Error(Errc::invalid_argument, "unknown preset '" + std::string(name) + "'");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Scripted scenarios

inline constexpr std::string_view kScenarioMission = "scenario";

/// Scripted excerpts of one mission: (1) transit after launch, (2) obstacle
/// during transit, (3) survey start reported with a stale progress_type,
/// (4) survey in progress. Ticks continue across the four excerpts.
inline StateLog scenario_replay(std::string_view name) {
  const std::string vessel(kSurveyorVessel);
  auto rec = [&](std::int64_t tick, VehicleState s, Behaviour b) {
    return StateRecord{vessel, tick, s, b};
  };
  StateLog log;
  log.mission = std::string(kScenarioMission);
  if (name == "scenario1") {
    for (std::int64_t t = 30; t < 34; ++t)
      log.records.push_back(rec(t, {true, Objective::launch, Progress::transiting, true, false},
                                Behaviour::transit));
  } else if (name == "scenario2") {
    for (std::int64_t t = 120; t < 124; ++t)
      log.records.push_back(rec(t, {true, Objective::survey, Progress::transiting, true, true},
                                Behaviour::avoid_obstacle));
  } else if (name == "scenario3") {
    for (std::int64_t t = 200; t < 202; ++t)
      log.records.push_back(rec(t, {true, Objective::survey, Progress::transiting, true, false},
                                Behaviour::survey));
  } else if (name == "scenario4") {
    for (std::int64_t t = 202; t < 206; ++t)
      log.records.push_back(rec(t, {true, Objective::survey, Progress::executing, true, false},
                                Behaviour::survey));
  } else {
    throw Error(Errc::unknown_scenario, "no scenario named '" + std::string(name) + "'");
  }
  return log;
}

inline StateLog scenario_replay(int number) {
  if (number < 1 || number > 4)
    throw Error(Errc::unknown_scenario, "no scenario numbered " + std::to_string(number));
  return scenario_replay("scenario" + std::to_string(number));
}

/// The four scenarios concatenated in order, as one continuous mission.
inline StateLog scenario_sequence() {
  StateLog log;
  log.mission = std::string(kScenarioMission);
  for (auto name : {"scenario1", "scenario2", "scenario3", "scenario4"}) {
    auto part = scenario_replay(name);
    log.records.insert(log.records.end(), part.records.begin(), part.records.end());
  }
  return log;
}

}  // namespace sxai
