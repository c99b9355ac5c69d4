// Command-line entry point: sim gen, gbdt train/eval, gate run/signals,
// pipeline features/run/compare.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "engage/features.hpp"
#include "engage/gate.hpp"
#include "engage/gbdt.hpp"
#include "engage/ingest.hpp"
#include "engage/pipeline.hpp"
#include "engage/sim.hpp"

namespace fs = std::filesystem;
using namespace engage;

namespace {

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;
  return run_config_from_json(j);
}

void print_metrics(const gbdt::Metrics& m) {
  std::cout << "accuracy " << m.accuracy << "  precision " << m.precision << "  recall "
            << m.recall << "  f1 " << m.f1 << "  roc_auc " << m.roc_auc << "\n"
            << "confusion [[TN,FP],[FN,TP]] = [[" << m.confusion[0][0] << ","
            << m.confusion[0][1] << "],[" << m.confusion[1][0] << "," << m.confusion[1][1]
            << "]]\n";
}

int cmd_sim_gen(const std::string& suite_path, const std::string& out_dir) {
  auto suite = sim::load_suite(suite_path);
  fs::create_directories(out_dir);
  fs::path mock_dir = fs::path(out_dir) / "mock";
  for (const auto& spec : suite) {
    Episode ep = sim::synthesize(spec);
    save_episode(ep, (fs::path(out_dir) / (spec.scenario_id + ".jsonl")).string());
    sim::script_mock_backend(spec, mock_dir.string());
  }
  std::cout << "wrote " << suite.size() << " episodes to " << out_dir << "\n";
  return 0;
}

int cmd_sim_random(int n, uint64_t seed, const std::string& out_path) {
  sim::save_suite(sim::make_random_suite(n, seed), out_path);
  std::cout << "wrote " << n << "-scenario suite to " << out_path << "\n";
  return 0;
}

int cmd_features(const std::string& suite_path, const std::string& out_path) {
  auto suite = sim::load_suite(suite_path);
  std::vector<std::string> warnings;
  auto set = sim::build_training_set(suite, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  gbdt::save_labeled_set(set, out_path);
  std::cout << "wrote " << set.size() << " feature rows to " << out_path << "\n";
  return 0;
}

int cmd_gbdt_train(const std::string& features_path, const std::string& model_path,
                   const std::string& config_path) {
  gbdt::TrainConfig config;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open train config: " + config_path);
    nlohmann::json j;
    in >> j;
    config = gbdt::train_config_from_json(j);
  }
  auto data = gbdt::load_labeled_set(features_path);
  auto model = gbdt::fit(data, config);
  for (const auto& w : model.warnings) std::cerr << "warning: " << w << "\n";
  gbdt::save_model(model, model_path);
  std::cout << "trained " << model.trees.size() << " trees on " << data.size()
            << " rows; training metrics:\n";
  print_metrics(gbdt::evaluate(model, data));
  return 0;
}

int cmd_gbdt_eval(const std::string& features_path, const std::string& model_path,
                  double threshold) {
  auto data = gbdt::load_labeled_set(features_path);
  auto model = gbdt::load_model(model_path);
  print_metrics(gbdt::evaluate(model, data, threshold));
  return 0;
}

int cmd_gate_run(const std::string& episode_path, const std::string& model_path,
                 const std::string& config_path, const std::string& overlay_out) {
  GateConfig gate;
  if (!config_path.empty()) gate = load_run_config(config_path).gate;
  Episode ep = load_episode(episode_path);
  auto model = gbdt::load_model(model_path);
  StageOneResult result = run_stage_one(ep, model, gate);

  for (const auto& e : result.events) std::cout << trigger_to_json(e).dump() << "\n";
  std::cout << "windows " << result.budget.windows_seen << ", classifier runs "
            << result.budget.classifier_runs << ", excluded-far "
            << result.budget.excluded_far_windows << ", probe-default "
            << result.budget.probe_default_windows << ", triggers "
            << result.budget.gaze_triggers << " gaze + " << result.budget.proxemic_triggers
            << " proxemic -> " << result.budget.merged_events << " events\n";
  for (const auto& d : result.diagnostics) std::cerr << "diagnostic: " << d << "\n";

  if (!overlay_out.empty()) {
    std::ofstream out(overlay_out);
    for (const auto& e : result.events) out << overlay_to_json(e).dump() << "\n";
    std::cout << "overlay plans written to " << overlay_out << "\n";
  }
  return 0;
}

// Debug dump: per-window signal and velocity traces as tab-delimited text.
int cmd_gate_signals(const std::string& episode_path, const std::string& track_filter) {
  Episode ep = load_episode(episode_path);
  for (const auto& [track_id, frames] : ep.tracks) {
    if (!track_filter.empty() && track_id != track_filter) continue;
    for (const auto& segment : split_segments(frames)) {
      for (size_t i = 0; i + kWindowFrames <= segment.size(); i += kWindowFrames) {
        std::vector<NormalizedPose> poses;
        try {
          for (size_t k = i; k < i + kWindowFrames; ++k)
            poses.push_back(normalize_pose(segment[k]));
          SignalWindow sw = compute_signals(poses, track_id, segment[i].timestamp);
          std::cout << "# track " << track_id << " window_start " << sw.window_start << "\n";
          std::cout << "t";
          for (int s = 0; s < kNumSignals; ++s)
            std::cout << "\t" << signal_name(s) << "\tv_" << signal_name(s);
          std::cout << "\n";
          for (size_t t = 0; t + 1 < sw.length(); ++t) {
            std::cout << segment[i + t].timestamp;
            for (int s = 0; s < kNumSignals; ++s)
              std::cout << "\t" << sw.signals[s][t] << "\t"
                        << sw.signals[s][t + 1] - sw.signals[s][t];
            std::cout << "\n";
          }
        } catch (const Error& e) {
          std::cerr << "skipped window: " << e.what() << "\n";
        }
      }
    }
  }
  return 0;
}

int cmd_pipeline_run(const std::string& config_path, const std::string& report_out,
                     const std::string& decisions_out, bool compare_only) {
  RunConfig config = load_run_config(config_path);
  config.validate();
  if (config.model_path.empty()) throw ConfigError("config must name model_path");
  auto model = gbdt::load_model(config.model_path);
  auto backend = make_backend(config);
  PipelineResult result = run_pipeline_from_paths(config, model, *backend);

  if (compare_only) {
    std::cout << "two-stage calls:     " << result.report.two_stage_calls << "\n"
              << "distance-only calls: " << result.report.distance_only_calls << "\n"
              << "exhaustive calls:    " << result.report.exhaustive_calls << "\n"
              << "two-stage on-time rate:     "
              << result.report.two_stage_timing.on_time_rate() << "\n"
              << "distance-only on-time rate: "
              << result.report.distance_only_timing.on_time_rate() << "\n";
    return 0;
  }

  std::cout << report_render(result.report);
  if (!report_out.empty()) {
    std::ofstream out(report_out);
    out << report_to_json(result.report).dump(2) << "\n";
  }
  if (!decisions_out.empty()) {
    std::ofstream out(decisions_out);
    for (const auto& d : result.decisions) out << decision_to_json(d).dump() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage engagement gating pipeline"};
  app.require_subcommand(1);

  auto* sim_cmd = app.add_subcommand("sim", "Synthetic scenario generation");
  sim_cmd->require_subcommand(1);
  std::string suite_path, out_dir = "out", out_path = "suite.json";
  int random_n = 30;
  uint64_t seed = 0;
  auto* sim_gen = sim_cmd->add_subcommand("gen", "Generate episodes + mock scripts");
  sim_gen->add_option("--suite", suite_path, "suite file")->required();
  sim_gen->add_option("--out", out_dir, "output directory")->required();
  auto* sim_random = sim_cmd->add_subcommand("random", "Write a randomized suite file");
  sim_random->add_option("--n", random_n, "scenario count");
  sim_random->add_option("--seed", seed, "rng seed");
  sim_random->add_option("--out", out_path, "suite file to write");

  auto* gbdt_cmd = app.add_subcommand("gbdt", "Classifier training and evaluation");
  gbdt_cmd->require_subcommand(1);
  std::string features_path, model_path = "model.json", train_config_path;
  double threshold = gbdt::kDefaultThreshold;
  auto* gbdt_train = gbdt_cmd->add_subcommand("train", "Train from a feature file");
  gbdt_train->add_option("--features", features_path, "feature file")->required();
  gbdt_train->add_option("--out", model_path, "model file to write");
  gbdt_train->add_option("--config", train_config_path, "train config JSON");
  auto* gbdt_eval = gbdt_cmd->add_subcommand("eval", "Evaluate a model on a feature file");
  gbdt_eval->add_option("--features", features_path, "feature file")->required();
  gbdt_eval->add_option("--model", model_path, "model file")->required();
  gbdt_eval->add_option("--threshold", threshold, "decision threshold");

  auto* gate_cmd = app.add_subcommand("gate", "Stage I gating");
  gate_cmd->require_subcommand(1);
  std::string episode_path, config_path, overlay_out, track_filter;
  auto* gate_run = gate_cmd->add_subcommand("run", "Gate one episode");
  gate_run->add_option("--episode", episode_path, "episode file")->required();
  gate_run->add_option("--model", model_path, "model file")->required();
  gate_run->add_option("--config", config_path, "run config JSON");
  gate_run->add_option("--overlay-out", overlay_out, "overlay sidecar to write");
  auto* gate_signals = gate_cmd->add_subcommand("signals", "Dump signal/velocity traces");
  gate_signals->add_option("--episode", episode_path, "episode file")->required();
  gate_signals->add_option("--track", track_filter, "restrict to one track");

  auto* pipe_cmd = app.add_subcommand("pipeline", "End-to-end replay");
  pipe_cmd->require_subcommand(1);
  std::string report_out, decisions_out;
  auto* pipe_features = pipe_cmd->add_subcommand("features", "Build a feature file from a suite");
  pipe_features->add_option("--suite", suite_path, "suite file")->required();
  pipe_features->add_option("--out", out_path, "feature file to write")->required();
  auto* pipe_run = pipe_cmd->add_subcommand("run", "Replay episodes through both stages");
  pipe_run->add_option("--config", config_path, "run config JSON")->required();
  pipe_run->add_option("--report", report_out, "machine-readable report to write");
  pipe_run->add_option("--decisions", decisions_out, "decision log to write");
  auto* pipe_compare = pipe_cmd->add_subcommand("compare", "Three-way call/timing comparison");
  pipe_compare->add_option("--config", config_path, "run config JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim_gen->parsed()) return cmd_sim_gen(suite_path, out_dir);
    if (sim_random->parsed()) return cmd_sim_random(random_n, seed, out_path);
    if (gbdt_train->parsed()) return cmd_gbdt_train(features_path, model_path, train_config_path);
    if (gbdt_eval->parsed()) return cmd_gbdt_eval(features_path, model_path, threshold);
    if (gate_run->parsed()) return cmd_gate_run(episode_path, model_path, config_path, overlay_out);
    if (gate_signals->parsed()) return cmd_gate_signals(episode_path, track_filter);
    if (pipe_features->parsed()) return cmd_features(suite_path, out_path);
    if (pipe_run->parsed()) return cmd_pipeline_run(config_path, report_out, decisions_out, false);
    if (pipe_compare->parsed()) return cmd_pipeline_run(config_path, "", "", true);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
