#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "engage/backend.hpp"
#include "engage/errors.hpp"
#include "engage/gate.hpp"
#include "engage/gbdt.hpp"
#include "engage/ingest.hpp"
#include "engage/orchestrator.hpp"
#include "engage/types.hpp"

namespace engage {

struct RunConfig {
  GateConfig gate;
  gbdt::TrainConfig train;
  OrchestratorConfig orch;
  std::string backend = "mock";  // mock | http
  std::string mock_script_dir;
  std::string http_host = "localhost";
  int http_port = 8080;
  std::string http_path = "/v1/complete";
  std::string model_path;
  std::vector<std::string> episode_paths;

  void validate() const {
    std::vector<std::string> errors;
    try {
      gate.validate();
    } catch (const Error& e) {
      errors.push_back(e.what());
    }
    try {
      train.validate();
    } catch (const Error& e) {
      errors.push_back(e.what());
    }
    try {
      orch.validate();
    } catch (const Error& e) {
      errors.push_back(e.what());
    }
    if (backend != "mock" && backend != "http")
      errors.push_back("backend must be 'mock' or 'http'");
    if (backend == "mock" && mock_script_dir.empty())
      errors.push_back("mock backend requires mock_script_dir");
    if (!errors.empty()) {
      std::string joined = "invalid configuration:";
      for (const auto& e : errors) joined += "\n  - " + e;
      throw ConfigError(joined);
    }
  }
};

struct TimingStats {
  long on_time = 0;
  long late = 0;
  long missed = 0;

  long total() const { return on_time + late + missed; }
  double on_time_rate() const { return total() > 0 ? double(on_time) / total() : 0.0; }
};

struct MetricsReport {
  long episodes = 0;
  CallBudget budget;          // aggregated over episodes
  long backend_requests = 0;  // observed at the backend
  long exhaustive_calls = 0;  // per-person-per-2s baseline
  long two_stage_calls = 0;   // merged trigger events
  long distance_only_calls = 0;
  TimingStats two_stage_timing;
  TimingStats distance_only_timing;
  long main_interactant_hits = 0;
  long main_interactant_total = 0;
  long action_correct = 0;
  long action_total = 0;
  std::map<std::string, long> deferrals_by_cause;
  std::map<std::string, long> decisions_by_action;
  std::optional<gbdt::Metrics> classifier;
};

struct DecisionLogEntry {
  std::string episode_id;
  std::string track_id;
  TriggerKind kind = TriggerKind::GazeShift;
  double trigger_time = 0.0;
  double clip_start = 0.0;
  double clip_end = 0.0;
  std::optional<double> score;
  double u_sc = 0.0;
  Action action = Action::Probe;
  Provenance provenance = Provenance::GateDefault;
  std::string justification;
};

struct PipelineResult {
  MetricsReport report;
  std::vector<DecisionLogEntry> decisions;
};

namespace detail {

inline void classify_timing(const TrackTruth& truth, const std::vector<TriggerEvent>& events,
                            const std::string& track_id, double window_s, TimingStats& out) {
  if (truth.preamble_times.empty()) return;
  std::vector<const TriggerEvent*> track_events;
  for (const auto& e : events)
    if (e.track_id == track_id) track_events.push_back(&e);
  bool on_time = false;
  for (double p : truth.preamble_times) {
    for (const auto* e : track_events) {
      if (std::abs(e->trigger_time - p) <= window_s) {
        on_time = true;
        break;
      }
    }
    if (on_time) break;
  }
  if (on_time)
    ++out.on_time;
  else if (!track_events.empty())
    ++out.late;
  else
    ++out.missed;
}

}  // namespace detail

inline std::unique_ptr<Backend> make_backend(const RunConfig& config) {
  if (config.backend == "mock") return std::make_unique<MockBackend>(config.mock_script_dir);
  return std::make_unique<HttpBackend>(config.http_host, config.http_port, config.http_path);
}

// Replays episodes through both stages and aggregates the report. The
// distance-only and exhaustive baselines are computed on the same data.
inline PipelineResult run_pipeline(const std::vector<Episode>& episodes,
                                   const gbdt::GbdtModel& model, const RunConfig& config,
                                   Backend& backend) {
  config.validate();
  PipelineResult result;
  MetricsReport& rpt = result.report;
  long backend_before = backend.request_count();

  for (const auto& episode : episodes) {
    ++rpt.episodes;
    StageOneResult stage_one = run_stage_one(episode, model, config.gate);
    auto baseline = baseline_distance_only(episode, config.gate);

    rpt.budget.windows_seen += stage_one.budget.windows_seen;
    rpt.budget.classifier_runs += stage_one.budget.classifier_runs;
    rpt.budget.excluded_far_windows += stage_one.budget.excluded_far_windows;
    rpt.budget.probe_default_windows += stage_one.budget.probe_default_windows;
    rpt.budget.gaze_triggers += stage_one.budget.gaze_triggers;
    rpt.budget.proxemic_triggers += stage_one.budget.proxemic_triggers;
    rpt.budget.merged_events += stage_one.budget.merged_events;
    rpt.exhaustive_calls += stage_one.budget.windows_seen;
    rpt.two_stage_calls += static_cast<long>(stage_one.events.size());
    rpt.distance_only_calls += static_cast<long>(baseline.size());

    // Per-clip independence: each trigger event gets its own Stage II pass.
    std::map<std::string, Action> first_action;
    for (const auto& event : stage_one.events) {
      ClipRef clip;
      clip.episode_id = episode.episode_id;
      clip.start_s = event.clip_start;
      clip.end_s = event.clip_end;
      clip.overlay_ref = episode.episode_id + ".overlay";
      StageTwoOutcome outcome = run_stage_two(event, backend, config.orch, clip);

      DecisionLogEntry entry;
      entry.episode_id = episode.episode_id;
      entry.track_id = event.track_id;
      entry.kind = event.kind;
      entry.trigger_time = event.trigger_time;
      entry.clip_start = event.clip_start;
      entry.clip_end = event.clip_end;
      entry.score = event.score;
      entry.u_sc = outcome.bundle.u_sc;
      entry.action = outcome.decision.action;
      entry.provenance = outcome.decision.provenance;
      entry.justification = outcome.decision.justification;
      result.decisions.push_back(entry);

      ++rpt.decisions_by_action[to_string(entry.action)];
      if (entry.provenance == Provenance::UncertaintyDeferral ||
          entry.provenance == Provenance::CritiqueInconclusive)
        ++rpt.deferrals_by_cause[to_string(entry.provenance)];
      if (!first_action.count(event.track_id)) first_action[event.track_id] = entry.action;
    }

    if (episode.ground_truth) {
      const auto& truth = *episode.ground_truth;
      if (truth.main_track_id) {
        ++rpt.main_interactant_total;
        for (const auto& e : stage_one.events)
          if (e.track_id == *truth.main_track_id) {
            ++rpt.main_interactant_hits;
            break;
          }
      }
      for (const auto& [track_id, tt] : truth.tracks) {
        if (tt.expected_kind == TriggerKind::GazeShift) {
          detail::classify_timing(tt, stage_one.events, track_id, config.gate.window_s,
                                  rpt.two_stage_timing);
          detail::classify_timing(tt, baseline, track_id, config.gate.window_s,
                                  rpt.distance_only_timing);
        }
        if (tt.expected_action) {
          ++rpt.action_total;
          Action predicted = first_action.count(track_id) ? first_action[track_id]
                                                          : Action::Probe;
          if (predicted == *tt.expected_action) ++rpt.action_correct;
        }
      }
    }
  }
  rpt.backend_requests = backend.request_count() - backend_before;
  return result;
}

inline PipelineResult run_pipeline_from_paths(const RunConfig& config,
                                              const gbdt::GbdtModel& model,
                                              Backend& backend) {
  std::vector<Episode> episodes;
  for (const auto& path : config.episode_paths) episodes.push_back(load_episode(path));
  return run_pipeline(episodes, model, config, backend);
}

namespace detail {

inline std::string fmt_rate(double r) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", r);
  return buf;
}

}  // namespace detail

inline nlohmann::ordered_json report_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["episodes"] = r.episodes;
  j["call_budget"] = {{"windows_seen", r.budget.windows_seen},
                      {"classifier_runs", r.budget.classifier_runs},
                      {"excluded_far_windows", r.budget.excluded_far_windows},
                      {"probe_default_windows", r.budget.probe_default_windows},
                      {"gaze_triggers", r.budget.gaze_triggers},
                      {"proxemic_triggers", r.budget.proxemic_triggers},
                      {"merged_events", r.budget.merged_events}};
  j["backend_requests"] = r.backend_requests;
  j["comparison"] = {{"two_stage_calls", r.two_stage_calls},
                     {"distance_only_calls", r.distance_only_calls},
                     {"exhaustive_calls", r.exhaustive_calls}};
  auto timing = [](const TimingStats& t) {
    return nlohmann::ordered_json{{"on_time", t.on_time},
                                  {"late", t.late},
                                  {"missed", t.missed},
                                  {"on_time_rate", detail::fmt_rate(t.on_time_rate())}};
  };
  j["two_stage_timing"] = timing(r.two_stage_timing);
  j["distance_only_timing"] = timing(r.distance_only_timing);
  j["main_interactant"] = {{"hits", r.main_interactant_hits},
                           {"total", r.main_interactant_total}};
  j["actions"] = {{"correct", r.action_correct},
                  {"total", r.action_total},
                  {"accuracy", detail::fmt_rate(r.action_total > 0
                                                    ? double(r.action_correct) / r.action_total
                                                    : 0.0)}};
  j["decisions_by_action"] = r.decisions_by_action;
  j["deferrals_by_cause"] = r.deferrals_by_cause;
  if (r.classifier) {
    j["classifier"] = {{"accuracy", detail::fmt_rate(r.classifier->accuracy)},
                       {"precision", detail::fmt_rate(r.classifier->precision)},
                       {"recall", detail::fmt_rate(r.classifier->recall)},
                       {"f1", detail::fmt_rate(r.classifier->f1)},
                       {"roc_auc", detail::fmt_rate(r.classifier->roc_auc)},
                       {"confusion", {{r.classifier->confusion[0][0],
                                       r.classifier->confusion[0][1]},
                                      {r.classifier->confusion[1][0],
                                       r.classifier->confusion[1][1]}}}};
  }
  return j;
}

// Rates carry three decimals; zero-event reports render explicit zeros.
inline std::string report_render(const MetricsReport& r) {
  std::ostringstream os;
  os << "episodes: " << r.episodes << "\n"
     << "windows seen: " << r.budget.windows_seen << "\n"
     << "classifier runs: " << r.budget.classifier_runs << "\n"
     << "excluded far windows: " << r.budget.excluded_far_windows << "\n"
     << "probe-default windows: " << r.budget.probe_default_windows << "\n"
     << "triggers: " << r.budget.gaze_triggers << " gaze, " << r.budget.proxemic_triggers
     << " proxemic (" << r.budget.merged_events << " merged events)\n"
     << "vlm calls: two-stage " << r.two_stage_calls << ", distance-only "
     << r.distance_only_calls << ", exhaustive " << r.exhaustive_calls << "\n"
     << "backend requests: " << r.backend_requests << "\n"
     << "two-stage timing: " << r.two_stage_timing.on_time << " on-time, "
     << r.two_stage_timing.late << " late, " << r.two_stage_timing.missed << " missed (rate "
     << detail::fmt_rate(r.two_stage_timing.on_time_rate()) << ")\n"
     << "distance-only timing: " << r.distance_only_timing.on_time << " on-time, "
     << r.distance_only_timing.late << " late, " << r.distance_only_timing.missed
     << " missed (rate " << detail::fmt_rate(r.distance_only_timing.on_time_rate()) << ")\n"
     << "main interactant hits: " << r.main_interactant_hits << "/"
     << r.main_interactant_total << "\n"
     << "action accuracy: " << r.action_correct << "/" << r.action_total << " ("
     << detail::fmt_rate(r.action_total > 0 ? double(r.action_correct) / r.action_total : 0.0)
     << ")\n";
  os << "decisions:";
  if (r.decisions_by_action.empty()) os << " 0";
  for (const auto& [action, n] : r.decisions_by_action) os << " " << action << "=" << n;
  os << "\ndeferrals:";
  if (r.deferrals_by_cause.empty()) os << " 0";
  for (const auto& [cause, n] : r.deferrals_by_cause) os << " " << cause << "=" << n;
  os << "\n";
  if (r.classifier) {
    os << "classifier: acc " << detail::fmt_rate(r.classifier->accuracy) << " precision "
       << detail::fmt_rate(r.classifier->precision) << " recall "
       << detail::fmt_rate(r.classifier->recall) << " f1 " << detail::fmt_rate(r.classifier->f1)
       << " auc " << detail::fmt_rate(r.classifier->roc_auc) << " confusion [[ "
       << r.classifier->confusion[0][0] << " " << r.classifier->confusion[0][1] << " ] [ "
       << r.classifier->confusion[1][0] << " " << r.classifier->confusion[1][1] << " ]]\n";
  }
  return os.str();
}

inline nlohmann::ordered_json decision_to_json(const DecisionLogEntry& d) {
  nlohmann::ordered_json j;
  j["episode_id"] = d.episode_id;
  j["track_id"] = d.track_id;
  j["kind"] = to_string(d.kind);
  j["trigger_time"] = d.trigger_time;
  j["clip"] = {d.clip_start, d.clip_end};
  if (d.score) j["score"] = *d.score;
  j["u_sc"] = d.u_sc;
  j["action"] = to_string(d.action);
  j["provenance"] = to_string(d.provenance);
  j["justification"] = d.justification;
  return j;
}

inline nlohmann::ordered_json trigger_to_json(const TriggerEvent& e) {
  nlohmann::ordered_json j;
  j["track_id"] = e.track_id;
  j["kind"] = to_string(e.kind);
  j["trigger_time"] = e.trigger_time;
  j["clip"] = {e.clip_start, e.clip_end};
  if (e.score) j["score"] = *e.score;
  return j;
}

inline nlohmann::ordered_json overlay_to_json(const TriggerEvent& e) {
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& oe : e.overlay.entries)
    entries.push_back({{"t", oe.frame_time},
                       {"box", {oe.box.x0, oe.box.y0, oe.box.x1, oe.box.y1}},
                       {"color", to_string(oe.color)}});
  nlohmann::ordered_json j = trigger_to_json(e);
  j["overlay"] = entries;
  return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  if (j.contains("gate")) {
    const auto& g = j.at("gate");
    c.gate.far_exclusion_m = g.value("far_exclusion_m", c.gate.far_exclusion_m);
    c.gate.personal_zone_m = g.value("personal_zone_m", c.gate.personal_zone_m);
    c.gate.window_s = g.value("window_s", c.gate.window_s);
    c.gate.group_merge_s = g.value("group_merge_s", c.gate.group_merge_s);
    c.gate.gaze_pad_s = g.value("gaze_pad_s", c.gate.gaze_pad_s);
    c.gate.proxemic_tail_s = g.value("proxemic_tail_s", c.gate.proxemic_tail_s);
    c.gate.stride_s = g.value("stride_s", c.gate.stride_s);
    c.gate.decision_threshold = g.value("decision_threshold", c.gate.decision_threshold);
    c.gate.confidence_floor = g.value("confidence_floor", c.gate.confidence_floor);
  }
  if (j.contains("train")) c.train = gbdt::train_config_from_json(j.at("train"));
  if (j.contains("orchestrator")) {
    const auto& o = j.at("orchestrator");
    std::string strat = o.value("strategy", std::string("SelfConsistency"));
    if (strat == "SelfConsistency")
      c.orch.strategy = Strategy::SelfConsistency;
    else if (strat == "SelfCritique")
      c.orch.strategy = Strategy::SelfCritique;
    else
      throw ConfigError("strategy must be SelfConsistency or SelfCritique");
    c.orch.k = o.value("k", c.orch.k);
    c.orch.temperature = o.value("temperature", c.orch.temperature);
    c.orch.eta = o.value("eta", c.orch.eta);
    c.orch.model_id = o.value("model_id", c.orch.model_id);
    c.orch.backoff_base_ms = o.value("backoff_base_ms", c.orch.backoff_base_ms);
  }
  c.backend = j.value("backend", c.backend);
  c.mock_script_dir = j.value("mock_script_dir", c.mock_script_dir);
  c.http_host = j.value("http_host", c.http_host);
  c.http_port = j.value("http_port", c.http_port);
  c.http_path = j.value("http_path", c.http_path);
  c.model_path = j.value("model_path", c.model_path);
  if (j.contains("episodes")) c.episode_paths = j.at("episodes").get<std::vector<std::string>>();
  return c;
}

}  // namespace engage
