// Command-line front end: one subcommand per pipeline stage.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "sxai/service.hpp"
#include "sxai/sxai.hpp"

namespace fs = std::filesystem;
using namespace sxai;

namespace {

// Default location for generated files; SXAI_DATA_DIR overrides it.
std::string data_path(const std::string& name) {
  const char* dir = std::getenv("SXAI_DATA_DIR");
  return (fs::path(dir && *dir ? dir : ".") / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write '" + path + "'");
  out << text;
}

VehicleState parse_state(const std::string& text) { return validate_state(parse_assignments(text)); }

void print_metrics(const Evaluation& e) {
  std::cout << std::fixed << std::setprecision(4) << "accuracy  " << e.metrics.accuracy << '\n'
            << "precision " << e.metrics.precision << '\n'
            << "recall    " << e.metrics.recall << '\n'
            << "f1        " << e.metrics.f1 << "\n\nconfusion (rows = true, columns = predicted)\n";
  std::cout << std::setw(18) << "";
  for (auto b : kBehaviourTokens) std::cout << std::setw(18) << b;
  std::cout << '\n';
  for (std::size_t i = 0; i < kBehaviourCount; ++i) {
    std::cout << std::setw(18) << kBehaviourTokens[i];
    for (std::size_t j = 0; j < kBehaviourCount; ++j) std::cout << std::setw(18) << e.confusion.at(i, j);
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surrogate-model explanations for simulated vessel missions"};
  app.require_subcommand(1);

  // simulate
  std::string sim_preset = "paper-scale", sim_out = data_path("missions.log");
  int sim_missions = 0;
  std::uint64_t sim_seed = 42;
  double sim_ambiguity = 0.0, sim_noise = 0.0;
  bool sim_csv = false;
  auto* simulate_cmd = app.add_subcommand("simulate", "Generate labelled mission logs");
  simulate_cmd->add_option("--preset", sim_preset, "paper-scale, trial or single")->capture_default_str();
  simulate_cmd->add_option("--missions", sim_missions, "Override the preset's mission count");
  simulate_cmd->add_option("--seed", sim_seed)->capture_default_str();
  simulate_cmd->add_option("--ambiguity", sim_ambiguity, "Stale progress_type rate")->check(CLI::Range(0.0, 1.0));
  simulate_cmd->add_option("--noise", sim_noise, "Label resampling rate")->check(CLI::Range(0.0, 1.0));
  simulate_cmd->add_option("--out", sim_out, "Output path, - for stdout")->capture_default_str();
  simulate_cmd->add_flag("--csv", sim_csv, "Write CSV instead of the record format");

  // train
  std::string train_kind = "tree", train_data = data_path("missions.log"), train_out = data_path("model.json");
  TreeParams tree_params;
  double nb_alpha = 1.0;
  int knn_k = 5;
  std::size_t background_cap = 512;
  std::uint64_t train_seed = 42;
  auto* train_cmd = app.add_subcommand("train", "Train a surrogate model");
  train_cmd->add_option("--model", train_kind, "tree, nb or knn")->check(CLI::IsMember({"tree", "nb", "knn"}));
  train_cmd->add_option("--data", train_data)->capture_default_str();
  train_cmd->add_option("--out", train_out)->capture_default_str();
  train_cmd->add_option("--max-depth", tree_params.max_depth)->capture_default_str();
  train_cmd->add_option("--max-leaf-nodes", tree_params.max_leaf_nodes)->capture_default_str();
  train_cmd->add_option("--alpha", nb_alpha)->capture_default_str();
  train_cmd->add_option("-k,--k", knn_k)->capture_default_str();
  train_cmd->add_option("--background-cap", background_cap)->capture_default_str();
  train_cmd->add_option("--seed", train_seed, "Background sampling seed")->capture_default_str();

  // evaluate
  std::string eval_model = data_path("model.json"), eval_data, eval_report;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a model on a labelled log");
  evaluate_cmd->add_option("--model-file", eval_model)->capture_default_str();
  evaluate_cmd->add_option("--data", eval_data)->required();
  evaluate_cmd->add_option("--report", eval_report, "Write metrics as JSON");

  // compare
  std::string cmp_data = data_path("missions.log"), cmp_report;
  CvOptions cv;
  cv.seed = 42;
  bool omit_timing = false;
  auto* compare_cmd = app.add_subcommand("compare", "Nested cross-validation of all model kinds");
  compare_cmd->add_option("--data", cmp_data)->capture_default_str();
  compare_cmd->add_option("--report", cmp_report, "Write the comparison as JSON");
  compare_cmd->add_option("--seed", cv.seed)->capture_default_str();
  compare_cmd->add_option("--outer-k", cv.outer_k)->capture_default_str();
  compare_cmd->add_option("--inner-k", cv.inner_k)->capture_default_str();
  compare_cmd->add_flag("--omit-timing", omit_timing, "Leave out fit/score times");

  // explain
  std::string ex_model = data_path("model.json"), ex_state, ex_method = "shapley";
  double threshold = kCausalityThreshold;
  auto* explain_cmd = app.add_subcommand("explain", "Attribute one prediction");
  explain_cmd->add_option("--model-file", ex_model)->capture_default_str();
  explain_cmd->add_option("--state", ex_state, "key=value,...")->required();
  explain_cmd->add_option("--method", ex_method)->check(CLI::IsMember({"shapley", "tree_path"}));
  explain_cmd->add_option("--threshold", threshold)->capture_default_str();

  // whatif
  std::string wi_model = data_path("model.json"), wi_state, wi_edit, wi_method = "shapley";
  auto* whatif_cmd = app.add_subcommand("whatif", "Counterfactual query");
  whatif_cmd->add_option("--model-file", wi_model)->capture_default_str();
  whatif_cmd->add_option("--state", wi_state, "key=value,...")->required();
  whatif_cmd->add_option("--edit", wi_edit, "key=value,...")->required();
  whatif_cmd->add_option("--method", wi_method)->check(CLI::IsMember({"shapley", "tree_path"}));

  // verbalise
  std::string vb_kb = data_path("knowledge.jsonl"), vb_type;
  auto* verbalise_cmd = app.add_subcommand("verbalise", "Print a knowledge log as sentences");
  verbalise_cmd->add_option("--kb", vb_kb)->capture_default_str();
  verbalise_cmd->add_option("--type", vb_type, "E1, E2 or E3");

  // replay
  std::string rp_model = data_path("model.json"), rp_log, rp_scenario, rp_kb = data_path("knowledge.jsonl"),
              rp_method = "shapley";
  auto* replay_cmd = app.add_subcommand("replay", "Run a log or scripted scenario through the pipeline");
  replay_cmd->add_option("--model-file", rp_model)->capture_default_str();
  auto* log_opt = replay_cmd->add_option("--log", rp_log, "Record log or CSV");
  replay_cmd->add_option("--scenario", rp_scenario, "scenario1..scenario4 or all")->excludes(log_opt);
  replay_cmd->add_option("--kb-out", rp_kb)->capture_default_str();
  replay_cmd->add_option("--method", rp_method)->check(CLI::IsMember({"shapley", "tree_path"}));
  replay_cmd->add_option("--threshold", threshold)->capture_default_str();

  // serve
  std::string sv_model = data_path("model.json"), sv_host = "127.0.0.1", sv_dir = data_path("sessions"),
              sv_method = "shapley";
  int sv_port = 8080, sv_pacing = 0;
  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP service");
  serve_cmd->add_option("--model-file", sv_model)->capture_default_str();
  serve_cmd->add_option("--port", sv_port)->capture_default_str();
  serve_cmd->add_option("--host", sv_host)->capture_default_str();
  serve_cmd->add_option("--data-dir", sv_dir, "Knowledge logs of mission sessions")->capture_default_str();
  serve_cmd->add_option("--pacing-ms", sv_pacing, "Delay per simulated tick")->capture_default_str();
  serve_cmd->add_option("--method", sv_method)->check(CLI::IsMember({"shapley", "tree_path"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate_cmd) {
      auto config = preset(sim_preset, sim_seed);
      if (sim_missions > 0) config.mission_count = sim_missions;
      config.ambiguity_rate = sim_ambiguity;
      config.label_noise_rate = sim_noise;
      const auto logs = simulate(config);
      std::ostringstream text;
      std::vector<StateRecord> records;
      for (const auto& l : logs) records.insert(records.end(), l.records.begin(), l.records.end());
      if (sim_csv)
        write_csv(text, records);
      else
        write_records(text, records);
      write_text(sim_out, text.str());
      std::cerr << "wrote " << records.size() << " records from " << logs.size() << " missions to " << sim_out
                << '\n';
    } else if (*train_cmd) {
      const auto data = load_log(train_data);
      HyperParams h = tree_params;
      if (train_kind == "nb") h = NbParams{nb_alpha};
      if (train_kind == "knn") h = KnnParams{knn_k};
      const auto m = build_model_file(data, h, background_cap, train_seed);
      if (const auto parent = fs::path(train_out).parent_path(); !parent.empty()) fs::create_directories(parent);
      save_model(train_out, m);
      std::cerr << "trained " << describe(h) << " on " << data.size() << " rows, wrote " << train_out << '\n';
    } else if (*evaluate_cmd) {
      const auto m = load_model(eval_model);
      const auto e = evaluate_on(*m.model, load_log(eval_data));
      print_metrics(e);
      if (!eval_report.empty()) {
        auto j = to_json(e.metrics);
        j["confusion_matrix"] = e.confusion.rows();
        write_text(eval_report, j.dump(2) + "\n");
      }
    } else if (*compare_cmd) {
      const auto reports = compare_models(load_log(cmp_data), cv);
      std::cout << comparison_text(reports, !omit_timing);
      if (!cmp_report.empty()) write_text(cmp_report, comparison_json(reports, !omit_timing).dump(2) + "\n");
    } else if (*explain_cmd) {
      const auto m = load_model(ex_model);
      const auto state = parse_state(ex_state);
      const auto e = explain_state(m, state, {parse_method(ex_method), threshold});
      nlohmann::json against = nlohmann::json::array();
      for (const auto& c : counter_evidence(e.attribution, encode(state))) against.push_back(to_json(c));
      const nlohmann::json out = {{"state", to_json(state)},
                                  {"prediction", to_json(e.prediction)},
                                  {"attribution", to_json(e.attribution)},
                                  {"causality", to_json(e.causality)},
                                  {"counter_evidence", against},
                                  {"sentence", e.sentence}};
      std::cout << out.dump(2) << '\n';
    } else if (*whatif_cmd) {
      const auto m = load_model(wi_model);
      const auto r = counterfactual(*m.model, parse_state(wi_state), parse_assignments(wi_edit),
                                    Background{m.background}, parse_method(wi_method));
      auto out = to_json(r);
      out["sentence"] = realise_counterfactual(r);
      std::cout << out.dump(2) << '\n';
    } else if (*verbalise_cmd) {
      std::optional<ExplanationType> type;
      if (!vb_type.empty()) type = parse_explanation_type(vb_type);
      for (const auto& e : load_knowledge(vb_kb))
        if (!type || e.explanation_type == *type) std::cout << realise(e) << '\n';
    } else if (*replay_cmd) {
      const auto m = load_model(rp_model);
      std::vector<StateLog> sources;
      if (!rp_scenario.empty()) {
        sources.push_back(rp_scenario == "all" ? scenario_sequence() : scenario_replay(rp_scenario));
      } else if (!rp_log.empty()) {
        sources = split_missions(to_records(load_log(rp_log)), fs::path(rp_log).stem().string());
      } else {
        throw Error(Errc::invalid_argument, "replay needs --log or --scenario");
      }
      if (const auto parent = fs::path(rp_kb).parent_path(); !parent.empty()) fs::create_directories(parent);
      KnowledgeBase kb(rp_kb);
      std::size_t records = 0, entries = 0;
      for (const auto& source : sources) {
        const auto result = run_pipeline(m, source, kb, {parse_method(rp_method), threshold},
                                         [](const FeedItem& item) {
                                           std::cout << item.entry.mission << ' ' << std::setw(6)
                                                     << item.entry.tick << "  " << item.sentence;
                                           if (item.mispredicted())
                                             std::cout << "  [observed " << to_string(*item.observed) << ']';
                                           std::cout << '\n';
                                         });
        records += result.records;
        entries += result.feed.size();
      }
      std::cerr << records << " records, " << entries << " entries written to " << rp_kb << '\n';
    } else if (*serve_cmd) {
      ServiceOptions opt;
      opt.data_dir = sv_dir;
      opt.pacing = std::chrono::milliseconds(sv_pacing);
      opt.pipeline.method = parse_method(sv_method);
      Service service(load_model(sv_model), opt);
      httplib::Server server;
      bind(server, service);
      std::cerr << "listening on " << sv_host << ':' << sv_port << '\n';
      if (!server.listen(sv_host, sv_port)) {
        std::cerr << "error: cannot listen on " << sv_host << ':' << sv_port << '\n';
        return 1;
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
