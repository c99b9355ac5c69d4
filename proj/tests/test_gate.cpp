#include <catch2/catch_amalgamated.hpp>

#include "engage/gate.hpp"
#include "engage/sim.hpp"

using namespace engage;

namespace {

// Model with no trees: predicts sigmoid(base) for every input, letting tests
// force the classifier verdict without training.
gbdt::GbdtModel constant_model(double base_score) {
  gbdt::GbdtModel m;
  m.n_features = kFeatureDim;
  m.base_score = base_score;
  m.bin_edges.assign(kFeatureDim, {});
  return m;
}

const gbdt::GbdtModel kAlwaysGaze = constant_model(10.0);
const gbdt::GbdtModel kNeverGaze = constant_model(-10.0);

sim::ActorSpec actor(const std::string& id, sim::Role role,
                     std::vector<std::pair<double, double>> traj,
                     std::vector<sim::HeadTurn> script = {}) {
  sim::ActorSpec a;
  a.track_id = id;
  a.role = role;
  a.trajectory = std::move(traj);
  a.head_script = std::move(script);
  return a;
}

Episode noiseless_episode(std::vector<sim::ActorSpec> actors, double duration = 12.0) {
  sim::ScenarioSpec spec;
  spec.scenario_id = "gate_test";
  spec.duration_s = duration;
  spec.noise_std = 0.0;
  spec.actors = std::move(actors);
  return sim::synthesize(spec);
}

TriggerEvent ev(const std::string& track, TriggerKind kind, double t, double score = 0.9) {
  TriggerEvent e;
  e.track_id = track;
  e.kind = kind;
  e.trigger_time = t;
  e.clip_start = t - 1.0;
  e.clip_end = t + 1.0;
  if (kind == TriggerKind::GazeShift) e.score = score;
  return e;
}

}  // namespace

TEST_CASE("gate config validation") {
  GateConfig bad;
  bad.personal_zone_m = 5.0;  // >= far_exclusion_m
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = GateConfig{};
  bad.window_s = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_NOTHROW(GateConfig{}.validate());
}

TEST_CASE("keypoint_box pads extrema by 10 percent per side") {
  PoseFrame f;
  f.keypoints[kNose] = Keypoint{100.0, 50.0, 0.9};
  f.keypoints[kLeftAnkle] = Keypoint{200.0, 250.0, 0.9};
  f.keypoints[kLeftWrist] = Keypoint{150.0, 100.0, 0.1};  // below floor, ignored
  auto box = keypoint_box(f);
  REQUIRE(box.has_value());
  CHECK(box->x0 == Catch::Approx(90.0));
  CHECK(box->x1 == Catch::Approx(210.0));
  CHECK(box->y0 == Catch::Approx(30.0));
  CHECK(box->y1 == Catch::Approx(270.0));

  PoseFrame empty;
  CHECK_FALSE(keypoint_box(empty).has_value());
}

TEST_CASE("gate_window rule order") {
  GateConfig cfg;
  Episode ep = noiseless_episode({actor("a", sim::Role::Bystander, {{0.0, 2.0}})});
  std::vector<PoseFrame> window(ep.tracks.at("a").begin(), ep.tracks.at("a").begin() + 30);

  SECTION("far exclusion short-circuits the classifier") {
    auto far = window;
    for (auto& f : far) f.distance_m = 4.5;
    auto out = gate_window(far, kAlwaysGaze, cfg);
    CHECK(out.kind == GateOutcomeKind::ExcludedFar);
    CHECK_FALSE(out.classifier_ran);
  }
  SECTION("exactly 4 m is not excluded") {
    auto edge = window;
    for (auto& f : edge) f.distance_m = 4.0;
    auto out = gate_window(edge, kNeverGaze, cfg);
    CHECK(out.kind == GateOutcomeKind::NoTrigger);
    CHECK(out.classifier_ran);
  }
  SECTION("positive classifier wins over proxemic entry") {
    auto close = window;
    for (auto& f : close) f.distance_m = 1.0;
    auto out = gate_window(close, kAlwaysGaze, cfg);
    CHECK(out.kind == GateOutcomeKind::GazeTrigger);
    CHECK(out.trigger_time == window.front().timestamp);
    CHECK(out.score >= cfg.decision_threshold);
  }
  SECTION("proxemic entry fires only without gaze in the window") {
    auto near = window;
    for (auto& f : near) f.distance_m = 1.0;
    auto out = gate_window(near, kNeverGaze, cfg);
    CHECK(out.kind == GateOutcomeKind::ProxemicTrigger);
    CHECK(out.trigger_time == near.front().timestamp);
    auto suppressed = gate_window(near, kNeverGaze, cfg, /*prior_gaze_in_window=*/true);
    CHECK(suppressed.kind == GateOutcomeKind::NoTrigger);
  }
  SECTION("default outcome is no trigger (probe)") {
    auto out = gate_window(window, kNeverGaze, cfg);
    CHECK(out.kind == GateOutcomeKind::NoTrigger);
  }
  SECTION("feature failure degrades to no trigger with a diagnostic") {
    auto broken = window;
    for (auto& f : broken) f.keypoints[kNose].reset();
    auto out = gate_window(broken, kAlwaysGaze, cfg);
    CHECK(out.kind == GateOutcomeKind::NoTrigger);
    CHECK_FALSE(out.diagnostic.empty());
    CHECK_FALSE(out.classifier_ran);
  }
}

TEST_CASE("group_triggers merges within 1 s and chains") {
  GateConfig cfg;
  SECTION("within merge window collapses to one event") {
    auto merged = group_triggers({ev("a", TriggerKind::GazeShift, 10.0),
                                  ev("a", TriggerKind::GazeShift, 10.6)},
                                 cfg);
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].trigger_time == 10.0);
    CHECK(merged[0].clip_end == Catch::Approx(11.6));
  }
  SECTION("beyond merge window stays separate") {
    auto merged = group_triggers({ev("a", TriggerKind::GazeShift, 10.0),
                                  ev("a", TriggerKind::GazeShift, 11.5)},
                                 cfg);
    CHECK(merged.size() == 2);
  }
  SECTION("chain merge is transitive through intermediate events") {
    auto merged = group_triggers({ev("a", TriggerKind::GazeShift, 10.0),
                                  ev("a", TriggerKind::GazeShift, 10.8),
                                  ev("a", TriggerKind::GazeShift, 11.5)},
                                 cfg);
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].clip_end == Catch::Approx(12.5));
  }
  SECTION("gaze dominates a mixed merge") {
    auto merged = group_triggers({ev("a", TriggerKind::ProxemicEntry, 10.0),
                                  ev("a", TriggerKind::GazeShift, 10.5)},
                                 cfg);
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].kind == TriggerKind::GazeShift);
    CHECK(merged[0].trigger_time == 10.0);
    REQUIRE(merged[0].score.has_value());
  }
  SECTION("different tracks never merge") {
    auto merged = group_triggers({ev("a", TriggerKind::GazeShift, 10.0),
                                  ev("b", TriggerKind::GazeShift, 10.2)},
                                 cfg);
    CHECK(merged.size() == 2);
  }
}

TEST_CASE("run_stage_one on an empty episode") {
  Episode ep;
  ep.episode_id = "empty";
  auto result = run_stage_one(ep, kAlwaysGaze, GateConfig{});
  CHECK(result.events.empty());
  CHECK(result.budget.windows_seen == 0);
  CHECK(result.budget.classifier_runs == 0);
}

TEST_CASE("run_stage_one budget accounting is exhaustive") {
  Episode ep = noiseless_episode({
      actor("near", sim::Role::Bystander, {{0.0, 2.0}}),
      actor("far", sim::Role::Bystander, {{0.0, 5.0}}),
  });
  auto result = run_stage_one(ep, kNeverGaze, GateConfig{});
  CHECK(result.budget.windows_seen ==
        result.budget.excluded_far_windows + result.budget.probe_default_windows +
            result.budget.trigger_windows());
  // 12 s at stride 2 s: 6 windows per track (frames 0..180, window needs 30).
  CHECK(result.budget.windows_seen == 12);
  CHECK(result.budget.excluded_far_windows == 6);
  CHECK(result.budget.classifier_runs == 6);
  CHECK(result.probe_timeline.size() == 6);
}

TEST_CASE("far tracks never reach the classifier") {
  Episode ep = noiseless_episode({actor("far", sim::Role::Bystander, {{0.0, 5.5}})});
  auto result = run_stage_one(ep, kAlwaysGaze, GateConfig{});
  CHECK(result.events.empty());
  CHECK(result.budget.classifier_runs == 0);
  CHECK(result.budget.excluded_far_windows == result.budget.windows_seen);
}

TEST_CASE("gaze trigger clip spans [t-2, t+4] clamped to the episode") {
  Episode ep = noiseless_episode({actor("a", sim::Role::Bystander, {{0.0, 2.0}})});
  auto result = run_stage_one(ep, kAlwaysGaze, GateConfig{});
  REQUIRE_FALSE(result.events.empty());
  // Consecutive window triggers at stride 2 don't merge (2 s apart > 1 s),
  // so the first event is the window at t=0.
  const auto& e = result.events.front();
  CHECK(e.kind == TriggerKind::GazeShift);
  CHECK(e.trigger_time == 0.0);
  CHECK(e.clip_start == 0.0);  // clamped at episode start
  CHECK(e.clip_end == Catch::Approx(4.0));
  REQUIRE(e.score.has_value());

  auto later = result.events[1];
  CHECK(later.clip_start == Catch::Approx(0.0));
  CHECK(later.clip_end == Catch::Approx(6.0));
}

TEST_CASE("proxemic trigger fires at zone entry with a 2 s tail clip") {
  // Distance ramps 2.0 -> 0.8 over 12 s; crosses 1.2 m at t = 8.0.
  Episode ep = noiseless_episode({actor("a", sim::Role::Ignorer, {{0.0, 2.0}, {12.0, 0.8}})});
  auto result = run_stage_one(ep, kNeverGaze, GateConfig{});
  REQUIRE_FALSE(result.events.empty());
  const auto& e = result.events.front();
  CHECK(e.kind == TriggerKind::ProxemicEntry);
  CHECK(e.trigger_time == Catch::Approx(8.0).margin(1.0 / kNominalFps + 1e-9));
  CHECK(e.clip_start == Catch::Approx(e.trigger_time));
  CHECK(e.clip_end == Catch::Approx(e.trigger_time + 2.0));
  CHECK(result.budget.proxemic_triggers >= 1);
  CHECK(result.budget.gaze_triggers == 0);
}

TEST_CASE("overlay colors: gaze events are blue with green classifier windows") {
  Episode ep = noiseless_episode({actor("a", sim::Role::Bystander, {{0.0, 2.0}})});
  auto result = run_stage_one(ep, kAlwaysGaze, GateConfig{});
  REQUIRE_FALSE(result.events.empty());
  for (const auto& e : result.events) {
    REQUIRE_FALSE(e.overlay.entries.empty());
    for (const auto& oe : e.overlay.entries) {
      CHECK(oe.frame_time >= e.clip_start);
      CHECK(oe.frame_time <= e.clip_end);
      CHECK(oe.box.x1 > oe.box.x0);
      CHECK(oe.box.y1 > oe.box.y0);
      // Every window here fired the classifier, so frames inside fired windows
      // are green; only frames past the last fired window stay blue.
      CHECK((oe.color == OverlayColor::Green || oe.color == OverlayColor::Blue));
    }
  }
  CHECK(result.events.front().overlay.entries.front().color == OverlayColor::Green);
}

TEST_CASE("overlay colors: proxemic events are orange without classifier firings") {
  Episode ep = noiseless_episode({actor("a", sim::Role::Ignorer, {{0.0, 2.0}, {12.0, 0.8}})});
  auto result = run_stage_one(ep, kNeverGaze, GateConfig{});
  REQUIRE_FALSE(result.events.empty());
  for (const auto& oe : result.events.front().overlay.entries)
    CHECK(oe.color == OverlayColor::Orange);
}

TEST_CASE("baseline_distance_only triggers at first zone entry per track") {
  Episode ep = noiseless_episode({
      actor("enters", sim::Role::Ignorer, {{0.0, 2.0}, {12.0, 0.8}}),
      actor("stays_out", sim::Role::Bystander, {{0.0, 2.0}}),
      actor("starts_in", sim::Role::Bystander, {{0.0, 1.0}}),
  });
  auto events = baseline_distance_only(ep, GateConfig{});
  REQUIRE(events.size() == 2);
  std::map<std::string, TriggerEvent> by_track;
  for (const auto& e : events) by_track[e.track_id] = e;
  REQUIRE(by_track.count("enters"));
  REQUIRE(by_track.count("starts_in"));
  CHECK(by_track["enters"].trigger_time == Catch::Approx(8.0).margin(1.0 / kNominalFps + 1e-9));
  CHECK(by_track["starts_in"].trigger_time == 0.0);
  for (const auto& e : events) {
    CHECK(e.kind == TriggerKind::ProxemicEntry);
    for (const auto& oe : e.overlay.entries) CHECK(oe.color == OverlayColor::Orange);
  }
}
