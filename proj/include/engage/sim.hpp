#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "engage/errors.hpp"
#include "engage/features.hpp"
#include "engage/gbdt.hpp"
#include "engage/ingest.hpp"
#include "engage/prompts.hpp"
#include "engage/types.hpp"

namespace engage {
namespace sim {

enum class Role { Interactor, Ignorer, Bystander };

inline const char* to_string(Role r) {
  switch (r) {
    case Role::Interactor: return "interactor";
    case Role::Ignorer: return "ignorer";
    case Role::Bystander: return "bystander";
  }
  return "?";
}

inline Role role_from_string(const std::string& s) {
  if (s == "interactor") return Role::Interactor;
  if (s == "ignorer") return Role::Ignorer;
  if (s == "bystander") return Role::Bystander;
  throw SchemaError("unknown actor role '" + s + "'");
}

struct HeadTurn {
  double time = 0.0;
  bool toward = true;  // toward the robot (frontal) vs away (profile)
  double duration = 0.8;
  double amplitude = 0.8;  // fraction of frontal-to-profile arc
};

struct ActorSpec {
  std::string track_id;
  Role role = Role::Bystander;
  std::vector<std::pair<double, double>> trajectory;  // (time, distance_m)
  std::vector<HeadTurn> head_script;
};

struct ScenarioSpec {
  std::string scenario_id;
  double duration_s = 12.0;
  double noise_std = 0.01;  // keypoint jitter, normalized units
  uint64_t seed = 0;
  int dissent = 0;  // of K=5 scripted analyses, how many disagree
  std::vector<ActorSpec> actors;

  void validate() const {
    if (!(duration_s > 0.0)) throw ConfigError("duration_s must be > 0");
    if (noise_std < 0.0) throw ConfigError("noise_std must be >= 0");
    for (const auto& a : actors) {
      for (const auto& t : a.head_script)
        if (!(t.duration > 0.0)) throw ConfigError("turn durations must be > 0");
      for (const auto& [t, d] : a.trajectory)
        if (!(d > 0.0)) throw ConfigError("trajectory distances must be > 0");
    }
  }
};

namespace detail {

constexpr double kTorsoPx = 100.0;
constexpr double kHeadRadiusPx = 18.0;
constexpr double kProfileAngle = M_PI / 2.0;

inline double lerp_trajectory(const std::vector<std::pair<double, double>>& traj, double t) {
  if (traj.empty()) return 2.0;
  if (t <= traj.front().first) return traj.front().second;
  if (t >= traj.back().first) return traj.back().second;
  for (size_t i = 0; i + 1 < traj.size(); ++i) {
    if (t <= traj[i + 1].first) {
      double u = (t - traj[i].first) / (traj[i + 1].first - traj[i].first);
      return traj[i].second + u * (traj[i + 1].second - traj[i].second);
    }
  }
  return traj.back().second;
}

inline double raised_cosine(double u) { return 0.5 * (1.0 - std::cos(M_PI * u)); }

// Head yaw angle at time t from the sequential turn script. 0 = frontal,
// kProfileAngle * amplitude = turned away.
inline double head_yaw(const std::vector<HeadTurn>& script, double t) {
  double yaw = script.empty() ? 0.0
                              : (script.front().toward
                                     ? script.front().amplitude * kProfileAngle
                                     : 0.0);
  for (size_t i = 0; i < script.size(); ++i) {
    const auto& turn = script[i];
    double target = turn.toward ? 0.0 : turn.amplitude * kProfileAngle;
    if (t < turn.time) break;
    if (t >= turn.time + turn.duration) {
      yaw = target;
      continue;
    }
    double u = (t - turn.time) / turn.duration;
    return yaw + (target - yaw) * raised_cosine(u);
  }
  return yaw;
}

inline void check_script(const std::vector<HeadTurn>& script) {
  for (size_t i = 0; i + 1 < script.size(); ++i) {
    if (script[i + 1].time < script[i].time + script[i].duration)
      throw InfeasibleScriptError("overlapping head turns at t=" +
                                  std::to_string(script[i + 1].time));
  }
}

inline Keypoint jittered(double x, double y, std::mt19937_64& rng, double sigma_px) {
  std::normal_distribution<double> n(0.0, sigma_px);
  double jx = sigma_px > 0.0 ? n(rng) : 0.0;
  double jy = sigma_px > 0.0 ? n(rng) : 0.0;
  return Keypoint{x + jx, y + jy, 0.9};
}

// Projected head landmarks for yaw angle phi: landmark at azimuth alpha maps
// to x-offset r*sin(alpha + phi).
inline PoseFrame make_frame(const ActorSpec& actor, double t, double yaw,
                            double center_x, std::mt19937_64& rng, double sigma_px) {
  PoseFrame f;
  f.timestamp = t;
  f.track_id = actor.track_id;
  double cx = center_x, cy = 300.0;
  double head_cx = cx, head_cy = cy - 130.0;
  const double r = kHeadRadiusPx;

  auto set = [&](int idx, double x, double y) { f.keypoints[idx] = jittered(x, y, rng, sigma_px); };
  set(kLeftShoulder, cx + 40.0, cy);
  set(kRightShoulder, cx - 40.0, cy);
  set(kLeftHip, cx + 32.0, cy + kTorsoPx);
  set(kRightHip, cx - 32.0, cy + kTorsoPx);
  set(kNose, head_cx + r * std::sin(yaw), head_cy + 4.0);
  set(kLeftEye, head_cx + r * std::sin(0.44 + yaw), head_cy - 2.0);
  set(kRightEye, head_cx + r * std::sin(-0.44 + yaw), head_cy - 2.0);
  set(kLeftEar, head_cx + r * std::sin(M_PI / 2.0 + yaw), head_cy + 6.0);
  set(kRightEar, head_cx + r * std::sin(-M_PI / 2.0 + yaw), head_cy + 6.0);
  // Arms and legs ride along; present but uninvolved.
  set(kLeftElbow, cx + 55.0, cy + 45.0);
  set(kRightElbow, cx - 55.0, cy + 45.0);
  set(kLeftWrist, cx + 60.0, cy + 90.0);
  set(kRightWrist, cx - 60.0, cy + 90.0);
  set(kLeftKnee, cx + 30.0, cy + 160.0);
  set(kRightKnee, cx - 30.0, cy + 160.0);
  set(kLeftAnkle, cx + 30.0, cy + 215.0);
  set(kRightAnkle, cx - 30.0, cy + 215.0);
  f.distance_m = lerp_trajectory(actor.trajectory, t);
  return f;
}

}  // namespace detail

// Deterministic 15 fps episode synthesis with scripted head-turn kinematics.
inline Episode synthesize(const ScenarioSpec& spec) {
  spec.validate();
  Episode ep;
  ep.episode_id = spec.scenario_id;
  EpisodeTruth truth;

  std::mt19937_64 rng(spec.seed);
  double sigma_px = spec.noise_std * detail::kTorsoPx;
  const int n_frames = static_cast<int>(std::floor(spec.duration_s * kNominalFps)) + 1;

  int actor_index = 0;
  for (const auto& actor : spec.actors) {
    detail::check_script(actor.head_script);
    double center_x = 320.0 + 260.0 * actor_index;
    auto& frames = ep.tracks[actor.track_id];
    for (int i = 0; i < n_frames; ++i) {
      double t = i / kNominalFps;
      double yaw = detail::head_yaw(actor.head_script, t);
      frames.push_back(detail::make_frame(actor, t, yaw, center_x, rng, sigma_px));
    }

    TrackTruth tt;
    switch (actor.role) {
      case Role::Interactor: {
        for (const auto& turn : actor.head_script)
          if (turn.toward) tt.preamble_times.push_back(turn.time);
        tt.expected_kind = TriggerKind::GazeShift;
        tt.expected_action = Action::Approach;
        if (!truth.main_track_id) truth.main_track_id = actor.track_id;
        break;
      }
      case Role::Ignorer: {
        for (int i = 0; i < n_frames; ++i) {
          double t = i / kNominalFps;
          if (detail::lerp_trajectory(actor.trajectory, t) <= 1.2) {
            tt.preamble_times.push_back(t);
            break;
          }
        }
        tt.expected_kind = TriggerKind::ProxemicEntry;
        tt.expected_action = Action::Leave;
        break;
      }
      case Role::Bystander:
        break;
    }
    truth.tracks[actor.track_id] = tt;
    ++actor_index;
  }
  ep.ground_truth = truth;
  return ep;
}

// Positives are the 2-second windows containing scripted toward-turns;
// negatives are the windows immediately preceding them.
inline gbdt::LabeledSet build_training_set(const std::vector<ScenarioSpec>& suite,
                                           std::vector<std::string>* warnings = nullptr,
                                           double confidence_floor = kDefaultConfidenceFloor) {
  if (suite.empty()) throw NoPreamblesError("empty scenario suite");
  gbdt::LabeledSet set;
  auto featurize = [&](const std::vector<PoseFrame>& frames, double wstart)
      -> std::optional<FeatureVector> {
    std::vector<NormalizedPose> poses;
    for (const auto& f : frames) {
      if (f.timestamp + 1e-9 < wstart) continue;
      if (poses.size() == kWindowFrames) break;
      poses.push_back(normalize_pose(f, confidence_floor));
    }
    if (poses.size() < kWindowFrames) return std::nullopt;
    return compute_features(compute_signals(poses));
  };

  bool any_preamble = false;
  for (const auto& spec : suite) {
    Episode ep = synthesize(spec);
    for (const auto& actor : spec.actors) {
      const auto& frames = ep.tracks.at(actor.track_id);
      for (const auto& turn : actor.head_script) {
        if (!turn.toward) continue;
        any_preamble = true;
        double wstart = std::floor(turn.time / 2.0) * 2.0;
        auto pos = featurize(frames, wstart);
        if (!pos) continue;
        if (wstart < 2.0) {
          if (warnings)
            warnings->push_back(spec.scenario_id + "/" + actor.track_id +
                                ": preamble in first window, no preceding negative");
          continue;
        }
        auto neg = featurize(frames, wstart - 2.0);
        if (!neg) continue;
        set.add(*pos, 1);
        set.add(*neg, 0);
      }
    }
  }
  if (!any_preamble) throw NoPreamblesError("suite contains no scripted preambles");
  return set;
}

namespace detail {

inline std::string gaze_analysis_text(Action expected, bool dissenting) {
  bool interact = (expected == Action::Approach) != dissenting;
  if (interact)
    return "Answer: [The person's body language shifts toward the camera, showing "
           "sustained gaze and a small wave, they want to interact with the robot]\n"
           "Evidence: [00:02] head turns toward the robot\n"
           "Evidence: [00:03] sustained gaze at the camera\n";
  return "Answer: [The person's body language stays oriented to their table, showing "
         "disinterest; they glance briefly then continue their activity, ignoring the "
         "robot]\n"
         "Evidence: [00:01] brief glance then looks back down\n"
         "Evidence: [00:03] continues prior activity\n";
}

inline std::string majority_vote_text(Action expected, int dissent) {
  std::string intent = expected == Action::Approach ? "Interact" : "No Intent to Interact";
  std::string behavior = expected == Action::Approach
                             ? "turns head toward the robot and holds gaze"
                             : "glances briefly then continues prior activity, ignoring "
                               "the robot";
  int votes = 5 - dissent;
  std::ostringstream os;
  os << "vote_summary:\n"
     << "  - behavior: " << behavior << "\n"
     << "    votes: " << votes << "/5\n"
     << "    time: [00:02]\n"
     << "    decision: include(4+/5)\n";
  if (dissent > 0)
    os << "  - behavior: waves a food wrapper at the robot\n"
       << "    votes: " << dissent << "/5\n"
       << "    time: [00:03]\n"
       << "    decision: exclude(1/5)\n";
  os << "Final log (Majority Vote):\n"
     << "  - [00:02] " << behavior << " (votes: " << votes << "/5)\n"
     << "Overall intention: Overall intention: [" << intent << "] (votes: " << votes
     << "/5)\n";
  return os.str();
}

inline std::string contradiction_text(int dissent) {
  if (dissent == 0) return "contradictions: []\n";
  std::ostringstream os;
  os << " - issue: whether the person waved at the robot\n"
     << "   candidates:\n";
  for (int i = 0; i < dissent; ++i)
    os << "   - analysis: " << (i + 1) << "\n"
       << "     quote: \"a small wave, they want to interact with the robot\"\n";
  os << "   - analysis: " << (dissent + 1) << "\n"
     << "     quote: \"continues their activity, ignoring the robot\"\n";
  return os.str();
}

inline std::string verify_text(Action expected, int dissent) {
  std::string intent = expected == Action::Approach ? "Interact" : "No Intent to Interact";
  std::string behavior = expected == Action::Approach
                             ? "turns head toward the robot and holds gaze"
                             : "glances briefly then continues prior activity, ignoring "
                               "the robot";
  std::ostringstream os;
  os << "contradictions:\n";
  if (dissent > 0) {
    os << " - issue: whether the person waved at the robot\n"
       << "   candidates:\n"
       << "   - analysis: 1\n"
       << "     quote: \"a small wave, they want to interact with the robot\"\n"
       << "     video_check: refuted\n"
       << "     indicators: [hands remain on the table throughout]\n"
       << " - resolution to the issue: no wave is visible in the clip.\n";
  }
  os << "Final log (Verification):\n"
     << " - [00:02] " << behavior << "\n"
     << "Overall intention: [" << intent << "] (rationale: " << behavior << ")\n";
  return os.str();
}

inline std::string action_text(Action expected) {
  switch (expected) {
    case Action::Approach:
      return "Decision: Approach to interact. The person holds their gaze on the robot "
             "and signals readiness to hand over trash.\n";
    case Action::Leave:
      return "Decision: Leave, do not interact. The person glances briefly and then "
             "deliberately continues their activity.\n";
    case Action::Probe:
      return "Decision: Inconclusive, Keep probing. The cues are too ambiguous to act "
             "on.\n";
  }
  return "";
}

}  // namespace detail

// Emits one response file per (scenario, event kind, stage, sample) covering
// every Stage II branch the scenario can reach.
inline void script_mock_backend(const ScenarioSpec& spec, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(fs::path(out_dir) / name);
    out << text;
  };
  // One script set per scenario; content keyed off the main expected action.
  Action expected = Action::Probe;
  for (const auto& actor : spec.actors) {
    if (actor.role == Role::Interactor) {
      expected = Action::Approach;
      break;
    }
    if (actor.role == Role::Ignorer) expected = Action::Leave;
  }
  for (const char* kind : {"gaze", "prox"}) {
    std::string analysis_stage =
        std::string(kind) == "gaze" ? "gaze_analysis" : "proxemics_analysis";
    for (int i = 0; i < 5; ++i)
      write(spec.scenario_id + "__" + kind + "__" + analysis_stage + "__" +
                std::to_string(i) + ".txt",
            detail::gaze_analysis_text(expected, i < spec.dissent));
    write(spec.scenario_id + "__" + kind + "__majority_vote__0.txt",
          detail::majority_vote_text(expected, spec.dissent));
    write(spec.scenario_id + "__" + kind + "__contradiction__0.txt",
          detail::contradiction_text(spec.dissent));
    write(spec.scenario_id + "__" + kind + "__verify__0.txt",
          detail::verify_text(expected, spec.dissent));
    write(spec.scenario_id + "__" + kind + "__action__0.txt",
          detail::action_text(expected));
  }
}

// Suite file I/O: a declarative JSON list of scenarios.
inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  ScenarioSpec s;
  s.scenario_id = j.at("scenario_id").get<std::string>();
  s.duration_s = j.value("duration_s", s.duration_s);
  s.noise_std = j.value("noise_std", s.noise_std);
  s.seed = j.value("seed", s.seed);
  s.dissent = j.value("dissent", s.dissent);
  for (const auto& aj : j.value("actors", nlohmann::json::array())) {
    ActorSpec a;
    a.track_id = aj.at("track_id").get<std::string>();
    a.role = role_from_string(aj.at("role").get<std::string>());
    for (const auto& p : aj.value("trajectory", nlohmann::json::array()))
      a.trajectory.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    for (const auto& tj : aj.value("head_script", nlohmann::json::array())) {
      HeadTurn t;
      t.time = tj.at("t").get<double>();
      std::string dir = tj.at("dir").get<std::string>();
      if (dir == "toward")
        t.toward = true;
      else if (dir == "away")
        t.toward = false;
      else
        throw SchemaError("head_script dir must be toward|away");
      t.duration = tj.value("duration", t.duration);
      t.amplitude = tj.value("amplitude", t.amplitude);
      a.head_script.push_back(t);
    }
    s.actors.push_back(std::move(a));
  }
  return s;
}

inline nlohmann::json scenario_to_json(const ScenarioSpec& s) {
  nlohmann::json actors = nlohmann::json::array();
  for (const auto& a : s.actors) {
    nlohmann::json traj = nlohmann::json::array();
    for (const auto& [t, d] : a.trajectory) traj.push_back({t, d});
    nlohmann::json script = nlohmann::json::array();
    for (const auto& h : a.head_script)
      script.push_back({{"t", h.time},
                        {"dir", h.toward ? "toward" : "away"},
                        {"duration", h.duration},
                        {"amplitude", h.amplitude}});
    actors.push_back({{"track_id", a.track_id},
                      {"role", to_string(a.role)},
                      {"trajectory", traj},
                      {"head_script", script}});
  }
  return {{"scenario_id", s.scenario_id}, {"duration_s", s.duration_s},
          {"noise_std", s.noise_std},     {"seed", s.seed},
          {"dissent", s.dissent},         {"actors", actors}};
}

inline std::vector<ScenarioSpec> load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open suite file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("suite file: ") + e.what());
  }
  std::vector<ScenarioSpec> suite;
  for (const auto& sj : j.at("scenarios")) suite.push_back(scenario_from_json(sj));
  return suite;
}

inline void save_suite(const std::vector<ScenarioSpec>& suite, const std::string& path) {
  nlohmann::json scenarios = nlohmann::json::array();
  for (const auto& s : suite) scenarios.push_back(scenario_to_json(s));
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write suite file: " + path);
  out << nlohmann::json{{"scenarios", scenarios}}.dump(2) << "\n";
}

// Randomized scenario: one interactor whose gaze shift happens at a distance
// drawn near the 1.2 m personal-zone boundary, plus a far bystander.
inline ScenarioSpec random_scenario(const std::string& id, std::mt19937_64& rng) {
  std::normal_distribution<double> dist_at_turn(1.2, 0.15);
  std::uniform_real_distribution<double> turn_time(4.5, 7.0);
  std::uniform_real_distribution<double> amplitude(0.6, 1.0);

  ScenarioSpec s;
  s.scenario_id = id;
  s.duration_s = 12.0;
  s.seed = rng();
  double d_turn = std::clamp(dist_at_turn(rng), 0.6, 1.8);
  double t_turn = std::floor(turn_time(rng) * 2.0) / 2.0;  // sits inside a window

  ActorSpec person;
  person.track_id = "p1";
  person.role = Role::Interactor;
  // Robot closes in linearly, hitting d_turn at the scripted turn.
  double d0 = d_turn + 0.35 * t_turn;
  person.trajectory = {{0.0, d0}, {t_turn, d_turn}, {s.duration_s, std::max(0.8, d_turn - 0.2)}};
  person.head_script = {{t_turn, true, 0.8, amplitude(rng)},
                        {t_turn + 3.0, false, 0.8, amplitude(rng)}};
  s.actors.push_back(person);

  ActorSpec bystander;
  bystander.track_id = "b1";
  bystander.role = Role::Bystander;
  bystander.trajectory = {{0.0, 5.5}, {s.duration_s, 5.0}};
  s.actors.push_back(bystander);
  return s;
}

inline std::vector<ScenarioSpec> make_random_suite(int n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ScenarioSpec> suite;
  suite.reserve(n);
  for (int i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "rand%04d", i);
    suite.push_back(random_scenario(id, rng));
  }
  return suite;
}

}  // namespace sim
}  // namespace engage
