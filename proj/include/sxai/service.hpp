#pragma once

// HTTP front end. Each mission session runs the pipeline on its own thread
// and exposes the growing knowledge base as a pull endpoint and an event
// stream; prediction, explanation and what-if queries are stateless.
//
// Handlers are plain member functions returning a status code and a JSON
// body so they can be exercised without a socket. `bind` attaches them to
// an httplib server.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stop_token>
#include <string>
#include <thread>

#include "httplib.h"
#include "sxai/pipeline.hpp"

namespace sxai {

struct Reply {
  int status = 200;
  nlohmann::json body;
};

inline Reply error_reply(int status, std::string_view code, std::string_view field,
                         std::string_view message) {
  return {status, {{"error", code}, {"field", field}, {"message", message}}};
}

struct ServiceOptions {
  std::string data_dir{};               // knowledge logs go here when set
  std::chrono::milliseconds pacing{0};  // wall-clock delay per simulated tick
  PipelineOptions pipeline{};
};

namespace detail {

inline nlohmann::json parse_body(const std::string& text) {
  if (text.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed JSON: ") + e.what(), "body");
  }
}

inline const nlohmann::json& require_field(const nlohmann::json& body, const std::string& field) {
  if (!body.is_object()) throw Error(Errc::parse_error, "request body must be a JSON object", "body");
  const auto it = body.find(field);
  if (it == body.end()) throw Error(Errc::parse_error, "missing field '" + field + "'", field);
  return *it;
}

inline std::map<std::string, std::string> token_map(const nlohmann::json& j, const std::string& field) {
  if (!j.is_object()) throw Error(Errc::parse_error, "'" + field + "' must be an object", field);
  std::map<std::string, std::string> out;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_string())
      throw Error(Errc::parse_error, "'" + key + "' must be a string token", key);
    out[key] = value.get<std::string>();
  }
  return out;
}

inline VehicleState state_field(const nlohmann::json& body) {
  return validate_state(token_map(require_field(body, "state"), "state"));
}

inline AttributionMethod method_field(const nlohmann::json& body, AttributionMethod fallback) {
  if (!body.is_object() || !body.contains("method")) return fallback;
  const auto& m = body["method"];
  if (!m.is_string()) throw Error(Errc::parse_error, "'method' must be a string", "method");
  try {
    return parse_method(m.get<std::string>());
  } catch (const Error& e) {
    throw Error(e.code(), e.what(), "method", m.get<std::string>());
  }
}

template <typename T>
T number_field(const nlohmann::json& body, const std::string& field, T fallback) {
  if (!body.contains(field)) return fallback;
  const auto& v = body[field];
  if (!v.is_number()) throw Error(Errc::parse_error, "'" + field + "' must be a number", field);
  return v.get<T>();
}

inline nlohmann::json entry_json(const ConceptSet& cs) {
  auto j = to_json(cs);
  j["sentence"] = realise(cs);
  return j;
}

inline std::string sse_event(std::string_view event, const nlohmann::json& data,
                             std::optional<std::size_t> id = {}) {
  std::string out;
  if (id) out += "id: " + std::to_string(*id) + "\n";
  out += "event: " + std::string(event) + "\ndata: " + data.dump() + "\n\n";
  return out;
}

}  // namespace detail

/// One running or finished mission.
class Session {
 public:
  struct Cursor {
    std::int64_t tick = 0;
    VehicleState state;
    Prediction prediction;
  };

  Session(std::string id, std::shared_ptr<const ModelFile> model, StateLog source,
          std::string log_path, PipelineOptions opt, std::chrono::milliseconds pacing)
      : id_(std::move(id)),
        model_(std::move(model)),
        source_(std::move(source)),
        kb_(std::move(log_path)),
        opt_(opt),
        pacing_(pacing) {}

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  void start() {
    worker_ = std::jthread([this](std::stop_token st) { run(st); });
  }

  const std::string& id() const { return id_; }
  const StateLog& source() const { return source_; }
  const ModelFile& model() const { return *model_; }
  const KnowledgeBase& knowledge() const { return kb_; }
  bool finished() const { return finished_.load(); }

  std::optional<Cursor> cursor() const {
    std::lock_guard lock(mutex_);
    return cursor_;
  }

  /// Blocks until the store holds more than `seen` entries, the mission has
  /// ended, or `timeout` elapses.
  void wait_for_entries(std::size_t seen, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    changed_.wait_for(lock, timeout, [&] { return finished_.load() || kb_.size() > seen; });
  }

  void wait_until_finished() const {
    std::unique_lock lock(mutex_);
    changed_.wait(lock, [&] { return finished_.load(); });
  }

  /// Stores a what-if answer at the current cursor tick.
  ConceptSet append_counterfactual(const CounterfactualResult& r) {
    std::lock_guard step(step_mutex_);
    const auto c = cursor();
    auto cs = make_counterfactual_concept_set(std::string(kSurveyorVessel), r, c ? c->tick : 0,
                                              source_.mission);
    kb_.append(cs);
    { std::lock_guard lock(mutex_); }
    changed_.notify_all();
    return cs;
  }

 private:
  void run(std::stop_token st) {
    MissionPipeline pipeline(*model_, kb_, source_.mission, opt_);
    std::mutex sleep_mutex;
    std::condition_variable_any sleeper;
    for (const auto& r : source_.records) {
      if (st.stop_requested()) break;
      {
        std::lock_guard step(step_mutex_);
        pipeline.step(r);
        std::lock_guard lock(mutex_);
        cursor_ = Cursor{r.tick, r.state, model_->model->predict(r.state)};
      }
      changed_.notify_all();
      if (pacing_.count() > 0) {
        std::unique_lock lock(sleep_mutex);
        sleeper.wait_for(lock, st, pacing_, [] { return false; });
      }
    }
    {
      std::lock_guard lock(mutex_);
      finished_ = true;
    }
    changed_.notify_all();
  }

  std::string id_;
  std::shared_ptr<const ModelFile> model_;
  StateLog source_;
  KnowledgeBase kb_;
  PipelineOptions opt_;
  std::chrono::milliseconds pacing_;

  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  std::mutex step_mutex_;
  std::optional<Cursor> cursor_;
  std::atomic<bool> finished_{false};
  std::jthread worker_;  // declared last: joins before the members above go away
};

class Service {
 public:
  explicit Service(ModelFile model, ServiceOptions opt = {})
      : model_(std::make_shared<const ModelFile>(std::move(model))), opt_(std::move(opt)) {
    if (!opt_.data_dir.empty()) {
      std::filesystem::create_directories(opt_.data_dir);
      // Continue numbering after logs left by an earlier run.
      for (const auto& e : std::filesystem::directory_iterator(opt_.data_dir)) {
        const auto stem = e.path().stem().string();
        if (e.path().extension() == ".jsonl" && stem.rfind("mission-", 0) == 0) {
          try {
            next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(stem.substr(8)) + 1);
          } catch (const std::exception&) {
          }
        }
      }
    }
  }

  const ModelFile& model() const { return *model_; }

  // POST /missions
  Reply create_mission(const nlohmann::json& body) {
    return guard([&] {
      if (!body.is_object()) throw Error(Errc::parse_error, "request body must be a JSON object", "body");
      const auto seed = detail::number_field<std::uint64_t>(body, "seed", 42);

      auto model = model_;
      if (body.contains("model_ref")) {
        const auto& ref = body["model_ref"];
        if (!ref.is_string()) throw Error(Errc::parse_error, "'model_ref' must be a path", "model_ref");
        try {
          model = std::make_shared<const ModelFile>(load_model(ref.get<std::string>()));
        } catch (const Error& e) {
          throw Error(e.code(), e.what(), "model_ref");
        }
      }

      StateLog source;
      if (body.contains("scenario")) {
        const auto& s = body["scenario"];
        if (!s.is_string()) throw Error(Errc::parse_error, "'scenario' must be a string", "scenario");
        try {
          source = s == "all" ? scenario_sequence() : scenario_replay(s.get<std::string>());
        } catch (const Error& e) {
          throw Error(e.code(), e.what(), "scenario", s.get<std::string>());
        }
      } else {
        std::string preset_name = "single";
        if (body.contains("preset")) {
          if (!body["preset"].is_string())
            throw Error(Errc::parse_error, "'preset' must be a string", "preset");
          preset_name = body["preset"].get<std::string>();
        }
        SimConfig config;
        try {
          config = preset(preset_name, seed);
        } catch (const Error& e) {
          throw Error(e.code(), e.what(), "preset", preset_name);
        }
        config.ambiguity_rate = detail::number_field(body, "ambiguity", config.ambiguity_rate);
        config.label_noise_rate = detail::number_field(body, "noise", config.label_noise_rate);
        if (config.ambiguity_rate < 0 || config.ambiguity_rate > 1)
          throw Error(Errc::invalid_argument, "rate must lie in [0, 1]", "ambiguity");
        if (config.label_noise_rate < 0 || config.label_noise_rate > 1)
          throw Error(Errc::invalid_argument, "rate must lie in [0, 1]", "noise");

        if (body.contains("plan")) {
          const auto& objectives = detail::require_field(body["plan"], "objectives");
          if (!objectives.is_array())
            throw Error(Errc::parse_error, "'objectives' must be an array", "objectives");
          std::vector<Objective> kinds;
          for (const auto& o : objectives) {
            if (!o.is_string()) throw Error(Errc::parse_error, "objective kinds are strings", "objectives");
            kinds.push_back(static_cast<Objective>(encode_category(kCurrentObjective, o.get<std::string>())));
          }
          try {
            auto plan = build_mission(kinds, seed, config.mean_mission_ticks);
            plan.id = "p" + std::to_string(seed);
            source = run_mission(plan, config);
          } catch (const Error& e) {
            throw Error(e.code(), e.what(), "plan");
          }
        } else {
          config.mission_count = 1;
          source = simulate(config).front();
        }
      }

      auto opt = opt_.pipeline;
      opt.method = detail::method_field(body, opt.method);
      if (opt.method == AttributionMethod::tree_path &&
          !dynamic_cast<const DecisionTree*>(model->model.get()))
        throw Error(Errc::invalid_argument, "tree_path needs a decision tree model", "method");

      std::unique_lock lock(sessions_mutex_);
      const auto id = "mission-" + std::to_string(next_id_++);
      const auto log_path =
          opt_.data_dir.empty() ? std::string{} : (std::filesystem::path(opt_.data_dir) / (id + ".jsonl")).string();
      auto session = std::make_shared<Session>(id, model, std::move(source), log_path, opt, opt_.pacing);
      const auto records = session->source().records.size();
      const auto mission = session->source().mission;
      sessions_[id] = session;
      lock.unlock();
      session->start();
      return Reply{201, {{"mission_id", id}, {"mission", mission}, {"records", records}}};
    });
  }

  std::shared_ptr<Session> session(const std::string& id) const {
    std::shared_lock lock(sessions_mutex_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  // GET /missions/{id}/state
  Reply mission_state(const std::string& id) const {
    const auto s = session(id);
    if (!s) return unknown_mission(id);
    nlohmann::json body{{"mission_id", id}, {"finished", s->finished()}};
    if (const auto c = s->cursor()) {
      body["tick"] = c->tick;
      body["state"] = to_json(c->state);
      body["prediction"] = to_json(c->prediction);
    } else {
      body["tick"] = nullptr;
      body["state"] = nullptr;
      body["prediction"] = nullptr;
    }
    return {200, body};
  }

  // GET /missions/{id}/knowledge?since_tick=
  Reply knowledge(const std::string& id, std::optional<std::int64_t> since_tick = {}) const {
    const auto entries = stored_entries(id);
    if (!entries) return unknown_mission(id);
    nlohmann::json list = nlohmann::json::array();
    for (const auto& e : *entries)
      if (!since_tick || e.tick > *since_tick) list.push_back(detail::entry_json(e));
    return {200, {{"mission_id", id}, {"entries", list}}};
  }

  /// Whole event stream of a mission; waits for the mission to finish.
  std::optional<std::string> stream_text(const std::string& id,
                                         std::optional<std::int64_t> since_tick = {}) const {
    if (const auto s = session(id)) s->wait_until_finished();
    const auto entries = stored_entries(id);
    if (!entries) return std::nullopt;
    std::string out;
    std::size_t sent = 0;
    for (std::size_t i = 0; i < entries->size(); ++i) {
      const auto& e = (*entries)[i];
      if (since_tick && e.tick <= *since_tick) continue;
      out += detail::sse_event("entry", detail::entry_json(e), i);
      ++sent;
    }
    return out + detail::sse_event("end", {{"entries", sent}});
  }

  // POST /predict
  Reply predict(const nlohmann::json& body) const {
    return guard([&] {
      const auto state = detail::state_field(body);
      return Reply{200, {{"state", to_json(state)}, {"prediction", to_json(model_->model->predict(state))}}};
    });
  }

  // POST /explain
  Reply explain(const nlohmann::json& body) const {
    return guard([&] {
      const auto state = detail::state_field(body);
      auto opt = opt_.pipeline;
      opt.method = detail::method_field(body, opt.method);
      const auto e = explain_state(*model_, state, opt);
      nlohmann::json against = nlohmann::json::array();
      for (const auto& c : counter_evidence(e.attribution, encode(state))) against.push_back(to_json(c));
      return Reply{200,
                   {{"state", to_json(state)},
                    {"prediction", to_json(e.prediction)},
                    {"attribution", to_json(e.attribution)},
                    {"causality", to_json(e.causality)},
                    {"counter_evidence", against},
                    {"concept_set", to_json(e.entry)},
                    {"sentence", e.sentence}}};
    });
  }

  // POST /whatif
  Reply whatif(const nlohmann::json& body) {
    return guard([&]() -> Reply {
      const auto state = detail::state_field(body);
      const auto edits = parse_edits(detail::token_map(detail::require_field(body, "edits"), "edits"));
      if (edits.empty()) throw Error(Errc::empty_edit, "no feature edits given", "edits");
      const auto method = detail::method_field(body, opt_.pipeline.method);
      const auto r = counterfactual(*model_->model, state, edits, Background{model_->background}, method);
      auto out = to_json(r);
      out["sentence"] = realise_counterfactual(r);
      if (body.contains("mission_id")) {
        const auto& mid = body["mission_id"];
        if (!mid.is_string()) throw Error(Errc::parse_error, "'mission_id' must be a string", "mission_id");
        const auto s = session(mid.get<std::string>());
        if (!s) return unknown_mission(mid.get<std::string>());
        out["concept_set"] = to_json(s->append_counterfactual(r));
      }
      return {200, out};
    });
  }

  // GET /vocabulary
  Reply vocabulary() const {
    nlohmann::json features = nlohmann::json::array();
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      nlohmann::json values = nlohmann::json::array();
      for (auto v : categories(f)) values.push_back(v);
      features.push_back({{"name", kFeatureNames[f]}, {"values", values}});
    }
    nlohmann::json behaviours = nlohmann::json::array();
    for (auto b : kBehaviourTokens) behaviours.push_back(b);
    return {200, {{"features", features}, {"behaviours", behaviours}, {"vocabulary_hash", vocabulary_hash()}}};
  }

 private:
  template <typename F>
  static Reply guard(F&& f) {
    try {
      return f();
    } catch (const Error& e) {
      return error_reply(400, errc_name(e.code()), e.feature(), e.what());
    } catch (const nlohmann::json::exception& e) {
      return error_reply(400, "ParseError", "body", e.what());
    }
  }

  static Reply unknown_mission(const std::string& id) {
    return error_reply(404, "UnknownMission", "mission_id", "no mission '" + id + "'");
  }

  // Live sessions first, then logs persisted by an earlier run.
  std::optional<std::vector<ConceptSet>> stored_entries(const std::string& id) const {
    if (const auto s = session(id)) return s->knowledge().entries();
    if (opt_.data_dir.empty() || id.find_first_of("/\\.") != std::string::npos) return std::nullopt;
    const auto path = std::filesystem::path(opt_.data_dir) / (id + ".jsonl");
    if (!std::filesystem::exists(path)) return std::nullopt;
    return load_knowledge(path.string());
  }

  std::shared_ptr<const ModelFile> model_;
  ServiceOptions opt_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

namespace detail {

inline void send(httplib::Response& res, const Reply& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

inline std::optional<std::int64_t> since_tick_param(const httplib::Request& req) {
  if (!req.has_param("since_tick")) return std::nullopt;
  const auto raw = req.get_param_value("since_tick");
  try {
    std::size_t used = 0;
    const auto v = std::stoll(raw, &used);
    if (used == raw.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(Errc::parse_error, "since_tick must be an integer", "since_tick", raw);
}

}  // namespace detail

/// Registers every endpoint on `server`. `service` must outlive it.
inline void bind(httplib::Server& server, Service& service) {
  using httplib::Request;
  using httplib::Response;

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

  auto with_body = [](auto handler) {
    return [handler](const Request& req, Response& res) {
      nlohmann::json body;
      try {
        body = detail::parse_body(req.body);
      } catch (const Error& e) {
        detail::send(res, error_reply(400, errc_name(e.code()), e.feature(), e.what()));
        return;
      }
      detail::send(res, handler(body));
    };
  };

  server.Post("/missions", with_body([&](const nlohmann::json& b) { return service.create_mission(b); }));
  server.Post("/predict", with_body([&](const nlohmann::json& b) { return service.predict(b); }));
  server.Post("/explain", with_body([&](const nlohmann::json& b) { return service.explain(b); }));
  server.Post("/whatif", with_body([&](const nlohmann::json& b) { return service.whatif(b); }));
  server.Get("/vocabulary", [&](const Request&, Response& res) { detail::send(res, service.vocabulary()); });

  server.Get(R"(/missions/([^/]+)/state)", [&](const Request& req, Response& res) {
    detail::send(res, service.mission_state(req.matches[1]));
  });

  server.Get(R"(/missions/([^/]+)/knowledge)", [&](const Request& req, Response& res) {
    try {
      detail::send(res, service.knowledge(req.matches[1], detail::since_tick_param(req)));
    } catch (const Error& e) {
      detail::send(res, error_reply(400, errc_name(e.code()), e.feature(), e.what()));
    }
  });

  server.Get(R"(/missions/([^/]+)/stream)", [&](const Request& req, Response& res) {
    std::optional<std::int64_t> since;
    try {
      since = detail::since_tick_param(req);
    } catch (const Error& e) {
      detail::send(res, error_reply(400, errc_name(e.code()), e.feature(), e.what()));
      return;
    }
    const std::string id = req.matches[1];
    auto session = service.session(id);
    if (!session) {
      // A finished mission from an earlier run streams from its log.
      if (auto text = service.stream_text(id, since)) {
        res.set_content(*text, "text/event-stream");
        return;
      }
      detail::send(res, error_reply(404, "UnknownMission", "mission_id", "no mission '" + id + "'"));
      return;
    }
    auto next = std::make_shared<std::size_t>(0);
    auto sent = std::make_shared<std::size_t>(0);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream", [session, next, sent, since](std::size_t, httplib::DataSink& sink) {
          session->wait_for_entries(*next, std::chrono::milliseconds(200));
          const bool done = session->finished();
          const auto entries = session->knowledge().entries();
          for (; *next < entries.size(); ++*next) {
            const auto& e = entries[*next];
            if (since && e.tick <= *since) continue;
            const auto text = detail::sse_event("entry", detail::entry_json(e), *next);
            if (!sink.write(text.data(), text.size())) return false;
            ++*sent;
          }
          if (done) {
            const auto text = detail::sse_event("end", {{"entries", *sent}});
            sink.write(text.data(), text.size());
            sink.done();
          }
          return true;
        });
  });
}

}  // namespace sxai
