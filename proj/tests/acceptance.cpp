// Acceptance gate: one test case per criterion, each printing a single
// [PASS]/[FAIL] line with its pinned tolerance.

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>

#include "engage/pipeline.hpp"
#include "engage/sim.hpp"
#include "gbdt_oracle.hpp"
#include "test_util.hpp"

using namespace engage;

namespace {

void verdict(int n, const char* name, bool ok) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", n, name);
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Training/held-out sets at the published hyperparameters (lr 0.1, depth 7,
// 100 rounds, min-leaf 8) on the jitter-0.01 synthetic suite.
const gbdt::LabeledSet& train_set() {
  static const gbdt::LabeledSet set =
      sim::build_training_set(sim::make_random_suite(200, 101));
  return set;
}

const gbdt::GbdtModel& paper_model() {
  static const gbdt::GbdtModel model = gbdt::fit(train_set(), gbdt::TrainConfig{});
  return model;
}

NormalizedPose frontal_pose() {
  NormalizedPose p;
  p[kNose] = Vec2{0.0, -0.5};
  p[kLeftEye] = Vec2{-0.1, -0.55};
  p[kRightEye] = Vec2{0.1, -0.55};
  p[kLeftEar] = Vec2{-0.2, -0.5};
  p[kRightEar] = Vec2{0.2, -0.5};
  return p;
}

std::vector<NormalizedPose> random_window(std::mt19937_64& rng) {
  std::normal_distribution<double> step(0.0, 0.02);
  NormalizedPose p = frontal_pose();
  std::vector<NormalizedPose> window;
  for (int t = 0; t < kWindowFrames; ++t) {
    for (int i : {kNose, kLeftEye, kRightEye, kLeftEar, kRightEar}) {
      p[i]->x += step(rng);
      p[i]->y += step(rng);
    }
    window.push_back(p);
  }
  return window;
}

// Long-hand recomputation of signals, velocities, and statistics.
std::array<double, kFeatureDim> brute_features(const std::vector<NormalizedPose>& window) {
  const size_t T = window.size();
  std::vector<std::array<double, kNumSignals>> s(T);
  for (size_t t = 0; t < T; ++t) {
    Vec2 nose = *window[t][kNose], leye = *window[t][kLeftEye], reye = *window[t][kRightEye];
    Vec2 lear = *window[t][kLeftEar], rear = *window[t][kRightEar];
    s[t][0] = lear.x - nose.x;
    s[t][1] = lear.y - nose.y;
    s[t][2] = rear.x - nose.x;
    s[t][3] = rear.y - nose.y;
    s[t][4] = std::hypot(leye.x - reye.x, leye.y - reye.y);
    s[t][5] = std::hypot(lear.x - rear.x, lear.y - rear.y);
    double dl = std::hypot(s[t][0], s[t][1]), dr = std::hypot(s[t][2], s[t][3]);
    double hi = std::max(dl, dr);
    s[t][6] = hi > 0.0 ? std::min(dl, dr) / hi : 1.0;
  }
  std::array<double, kFeatureDim> out{};
  for (int k = 0; k < kNumSignals; ++k) {
    std::vector<double> v;
    for (size_t t = 0; t + 1 < T; ++t) v.push_back(s[t + 1][k] - s[t][k]);
    double mx = v[0], mn = v[0], mean = 0.0;
    for (double e : v) {
      mx = std::max(mx, e);
      mn = std::min(mn, e);
      mean += e;
    }
    mean /= v.size();
    double var = 0.0;
    for (double e : v) var += (e - mean) * (e - mean);
    var /= v.size();
    out[3 * k + 0] = mx;
    out[3 * k + 1] = mn;
    out[3 * k + 2] = std::sqrt(var);
  }
  return out;
}

// Scenario whose gaze shift happens >= 4 s before personal-zone entry.
sim::ScenarioSpec early_gaze_scenario(int i, uint64_t seed) {
  sim::ScenarioSpec s;
  s.scenario_id = "early" + std::to_string(i);
  s.duration_s = 12.0;
  s.seed = seed;
  sim::ActorSpec person;
  person.track_id = "p1";
  person.role = sim::Role::Interactor;
  // Gaze shift at t = 4 at 2.0 m; the robot crosses 1.2 m only at t = 9.
  person.trajectory = {{0.0, 2.6}, {4.0, 2.0}, {9.0, 1.2}, {12.0, 1.0}};
  person.head_script = {{4.0, true, 0.8, 0.9}, {7.0, false, 0.8, 0.9}};
  s.actors.push_back(person);
  return s;
}

std::string canonical(const PromptTemplate& t) {
  std::string out = t.segments[0];
  for (size_t i = 0; i < t.placeholders.size(); ++i)
    out += "{" + t.placeholders[i] + "}" + t.segments[i + 1];
  return out;
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Analysis vote(Intent i) {
  Analysis a;
  a.intent = i;
  return a;
}

TriggerEvent gaze_event(const std::string& episode = "s1") {
  TriggerEvent e;
  e.track_id = "p1";
  e.kind = TriggerKind::GazeShift;
  e.trigger_time = 4.0;
  e.clip_start = 2.0;
  e.clip_end = 8.0;
  (void)episode;
  return e;
}

ClipRef clip_for(const std::string& episode) {
  ClipRef c;
  c.episode_id = episode;
  c.start_s = 2.0;
  c.end_s = 8.0;
  return c;
}

}  // namespace

TEST_CASE("criterion 1: feature oracle") {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  bool ok = true;
  for (int trial = 0; trial < 200; ++trial) {
    auto window = random_window(rng);
    FeatureVector fv = compute_features(compute_signals(window));
    auto expected = brute_features(window);
    ok = ok && fv.values.size() == 21;
    for (int i = 0; i < kFeatureDim; ++i)
      ok = ok && std::abs(fv.values[i] - expected[i]) <= 1e-9;
  }
  double elapsed = seconds_since(t0);
  ok = ok && elapsed < 1.0;
  verdict(1, "features match brute-force oracle on 200 windows within 1e-9, < 1 s", ok);
  REQUIRE(ok);
}

TEST_CASE("criterion 2: classifier quality at paper hyperparameters") {
  auto t0 = std::chrono::steady_clock::now();
  bool ok = train_set().size() == 400;
  const auto& model = paper_model();
  auto held_out = sim::build_training_set(sim::make_random_suite(100, 102));
  auto metrics = gbdt::evaluate(model, held_out);
  double elapsed = seconds_since(t0);
  ok = ok && metrics.f1 >= 0.80 && metrics.roc_auc >= 0.85 && elapsed < 30.0;
  std::printf("  (f1 %.3f auc %.3f on %zu held-out rows, %.1f s)\n", metrics.f1,
              metrics.roc_auc, held_out.size(), elapsed);
  verdict(2, "400-window training, held-out F1 >= 0.80 and AUC >= 0.85, < 30 s", ok);
  REQUIRE(ok);
}

TEST_CASE("criterion 3: GBDT oracle equivalence") {
  std::mt19937_64 rng(303);
  std::normal_distribution<double> nd;
  std::bernoulli_distribution flip(0.1);
  bool ok = true;
  for (int trial = 0; trial < 10; ++trial) {
    gbdt::LabeledSet s;
    int n = 50 + trial * 15;  // <= 200 rows
    for (int i = 0; i < n; ++i) {
      double a = nd(rng), b = nd(rng), c = nd(rng);
      int y = (a - 0.4 * b > 0.0) ? 1 : 0;
      if (flip(rng)) y = 1 - y;
      s.x.push_back({a, b, c});
      s.y.push_back(y);
    }
    gbdt::TrainConfig cfg;
    cfg.max_depth = 2;
    cfg.n_iterations = 5;
    cfg.min_samples_leaf = 8;
    cfg.n_bins = 256;
    auto model = gbdt::fit(s, cfg);
    oracle::Config ocfg;
    ocfg.max_depth = 2;
    ocfg.n_rounds = 5;
    ocfg.min_samples_leaf = 8;
    auto* om = oracle::fit(s.x, s.y, ocfg);
    int agree = 0;
    for (int i = 0; i < n; ++i)
      agree += (gbdt::predict_proba(model, s.x[i]) >= 0.5) ==
               (oracle::predict_proba(om, s.x[i]) >= 0.5);
    oracle::free_model(om);
    ok = ok && static_cast<double>(agree) / n >= 0.95;
  }
  verdict(3, "verdicts at threshold 0.5 agree with the exact-split oracle >= 95%", ok);
  REQUIRE(ok);
}

TEST_CASE("criterion 4: gate call budget on the 30-scenario benchmark") {
  auto t0 = std::chrono::steady_clock::now();
  auto suite = sim::make_random_suite(30, 2026);
  long windows = 0, events = 0, far_track_events = 0;
  for (const auto& spec : suite) {
    Episode ep = sim::synthesize(spec);
    auto result = run_stage_one(ep, paper_model(), GateConfig{});
    windows += result.budget.windows_seen;
    events += static_cast<long>(result.events.size());
    for (const auto& e : result.events)
      if (e.track_id == "b1") ++far_track_events;  // bystander stays > 4 m
  }
  double elapsed = seconds_since(t0);
  bool ok = events * 3 <= windows && far_track_events == 0 && elapsed < 10.0;
  std::printf("  (%ld two-stage calls vs %ld exhaustive, %.1f s)\n", events, windows, elapsed);
  verdict(4, "two-stage calls <= exhaustive/3 with zero calls beyond 4 m, < 10 s", ok);
  REQUIRE(ok);
}

TEST_CASE("criterion 5: gate timing beats the distance-only baseline") {
  std::vector<sim::ScenarioSpec> suite;
  for (int i = 0; i < 10; ++i) suite.push_back(early_gaze_scenario(i, 500 + i));
  TimingStats two_stage, baseline_timing;
  for (const auto& spec : suite) {
    Episode ep = sim::synthesize(spec);
    auto stage_one = run_stage_one(ep, paper_model(), GateConfig{});
    auto baseline = baseline_distance_only(ep, GateConfig{});
    const auto& tt = ep.ground_truth->tracks.at("p1");
    detail::classify_timing(tt, stage_one.events, "p1", 2.0, two_stage);
    detail::classify_timing(tt, baseline, "p1", 2.0, baseline_timing);
  }
  bool ok = two_stage.on_time_rate() > baseline_timing.on_time_rate();
  std::printf("  (two-stage %.2f vs baseline %.2f on-time rate over %ld tracks)\n",
              two_stage.on_time_rate(), baseline_timing.on_time_rate(), two_stage.total());
  verdict(5, "on-time rate strictly exceeds baseline when gaze precedes entry by >= 4 s", ok);
  REQUIRE(ok);
}

TEST_CASE("criterion 6: u_SC exactness over all 21 vote partitions") {
  testutil::TempDir dir;
  testutil::write_file(
      dir.file(MockBackend::key("any", TriggerKind::GazeShift, PromptStage::MajorityVote, 0)),
      "Overall intention: Overall intention: [Interact] (votes: 5/5)\n");
  OrchestratorConfig cfg;  // eta = 0.25
  bool ok = true;
  int partitions = 0;
  for (int n1 = 0; n1 <= 5; ++n1) {
    for (int n2 = 0; n2 + n1 <= 5; ++n2) {
      int n3 = 5 - n1 - n2;
      ++partitions;
      std::vector<Analysis> analyses;
      for (int i = 0; i < n1; ++i) analyses.push_back(vote(Intent::Interact));
      for (int i = 0; i < n2; ++i) analyses.push_back(vote(Intent::NoIntent));
      for (int i = 0; i < n3; ++i) analyses.push_back(vote(Intent::Inconclusive));
      int best = std::max({n1, n2, n3});
      double expected_u = 1.0 - best / 5.0;

      MockBackend backend(dir.path.string());
      auto bundle =
          self_consistency(gaze_event(), analyses, backend, cfg, clip_for("any"));
      ok = ok && bundle.u_sc == expected_u;
      ok = ok && bundle.deferred == (expected_u > cfg.eta);
    }
  }
  ok = ok && partitions == 21;
  verdict(6, "u_sc == 1 - max/5 exactly on all 21 partitions; deferral iff u_sc > eta", ok);
  REQUIRE(ok);
}

TEST_CASE("criterion 7: voting rules byte-tested with stable goldens") {
  auto run_once = [](int dissent, testutil::TempDir& dir) {
    sim::ScenarioSpec spec;
    spec.scenario_id = "vote";
    spec.dissent = dissent;
    sim::ActorSpec a;
    a.track_id = "p1";
    a.role = sim::Role::Interactor;
    a.trajectory = {{0.0, 2.0}};
    a.head_script = {{6.0, true, 0.8, 0.8}};
    spec.actors.push_back(a);
    sim::script_mock_backend(spec, dir.path.string());
    MockBackend backend(dir.path.string());
    OrchestratorConfig cfg;
    cfg.backoff_base_ms = 1;
    auto analyses = sample_analyses(gaze_event(), backend, cfg, clip_for("vote"));
    return self_consistency(gaze_event(), std::move(analyses), backend, cfg,
                            clip_for("vote"));
  };

  bool ok = true;
  {
    testutil::TempDir dir;
    auto unanimous = run_once(0, dir);
    ok = ok && !unanimous.deferred && unanimous.intent == Intent::Interact;
    ok = ok && unanimous.synthesized_log.find("(votes: 5/5)") != std::string::npos;
  }
  {
    testutil::TempDir dir;
    auto lone = run_once(1, dir);
    ok = ok && !lone.deferred;
    // The scripted synthesis exercises include(4+/5) for the majority claim
    // and exclude(1/5) for the minority claim.
    std::string script =
        testutil::read_file(dir.file("vote__gaze__majority_vote__0.txt"));
    ok = ok && script.find("decision: include(4+/5)") != std::string::npos;
    ok = ok && script.find("decision: exclude(1/5)") != std::string::npos;
    auto again = run_once(1, dir);
    ok = ok && again.synthesized_log == lone.synthesized_log;  // golden stability
    ok = ok && again.intent_votes == lone.intent_votes;
  }
  {
    testutil::TempDir dir;
    auto split = run_once(2, dir);  // 3 vs 2: the inconclusive (2/5, 3/5) band
    ok = ok && split.deferred && split.u_sc == 0.4;
  }
  verdict(7, "include(4+/5), exclude(1/5), inconclusive(2/5, 3/5); goldens stable", ok);
  REQUIRE(ok);
}

TEST_CASE("criterion 8: self-critique branch coverage with provenance") {
  OrchestratorConfig cfg;
  cfg.strategy = Strategy::SelfCritique;
  cfg.backoff_base_ms = 1;
  auto scripted = [&](const std::string& verify_text) {
    testutil::TempDir dir;
    auto key = [&](PromptStage stage, int sample) {
      return dir.file(MockBackend::key("any", TriggerKind::GazeShift, stage, sample));
    };
    for (int i = 0; i < 5; ++i)
      testutil::write_file(key(PromptStage::IndependentGaze, i),
                           "Answer: [they want to interact with the robot]\n"
                           "Evidence: [00:02] turns toward the robot\n");
    testutil::write_file(key(PromptStage::Contradiction, 0), "contradictions: []\n");
    testutil::write_file(key(PromptStage::Verify, 0), verify_text);
    testutil::write_file(key(PromptStage::Action, 0),
                         "Decision: Approach to interact. Sustained orientation.\n");
    MockBackend backend(dir.path.string());
    return run_stage_two(gaze_event(), backend, cfg, clip_for("any"));
  };

  bool ok = true;
  auto clean = scripted(
      "Final log (Verification):\n - [00:02] turns toward the robot\n"
      "Overall intention: [Interact] (rationale: sustained orientation)\n");
  ok = ok && !clean.bundle.deferred && clean.decision.action == Action::Approach &&
       clean.decision.provenance == Provenance::ActionPrompt;

  auto refuted = scripted(
      "contradictions:\n"
      " - issue: whether the person waved at the robot\n"
      "   candidates:\n"
      "   - analysis: 2\n"
      "     quote: \"they wave, wanting to interact\"\n"
      "     video_check: refuted\n"
      "     indicators: [hands stay on the table]\n"
      " - resolution to the issue: no wave occurs.\n"
      "Final log (Verification):\n - [00:02] turns toward the robot\n"
      "Overall intention: [Interact] (rationale: orientation without the wave)\n");
  ok = ok && !refuted.bundle.deferred && refuted.decision.action == Action::Approach &&
       refuted.decision.provenance == Provenance::ActionPrompt &&
       refuted.bundle.verification.size() == 1 &&
       refuted.bundle.verification[0].verdict == "refuted";

  auto inconclusive = scripted(
      "contradictions:\n"
      " - issue: whether the person waved at the robot\n"
      "   candidates:\n"
      "   - analysis: 2\n"
      "     quote: \"they wave, wanting to interact\"\n"
      "     video_check: inconclusive\n"
      "Final log (Verification):\n - [00:02] possible hand motion\n"
      "Overall intention: [Interact] (rationale: best guess)\n");
  ok = ok && inconclusive.bundle.deferred &&
       inconclusive.decision.action == Action::Probe &&
       inconclusive.decision.provenance == Provenance::CritiqueInconclusive;

  verdict(8, "no-contradiction and refuted branches proceed; inconclusive claim probes", ok);
  REQUIRE(ok);
}

TEST_CASE("criterion 9: prompt fidelity checksums") {
  bool ok = true;
  ok = ok && fnv1a(canonical(prompts::independent_gaze())) == 0xcce7e5e55e84462dull;
  ok = ok && fnv1a(canonical(prompts::independent_proxemics())) == 0x7291de0f90fe61cbull;
  ok = ok && fnv1a(canonical(prompts::contradiction())) == 0x8f7f34cb5b5a485aull;
  ok = ok && fnv1a(canonical(prompts::verify())) == 0xc2d6387543d889d8ull;
  ok = ok && fnv1a(canonical(prompts::majority_vote())) == 0xfcbfd7eef872a077ull;
  ok = ok && fnv1a(canonical(prompts::action())) == 0x6296c0091dd189d6ull;
  // Instantiation only fills the placeholder spans.
  const auto& t = prompts::verify();
  std::string rendered = t.render({"@D@", "@A@", "@C@"});
  size_t p1 = rendered.find("@D@"), p2 = rendered.find("@A@"), p3 = rendered.find("@C@");
  ok = ok && p1 != std::string::npos && p2 != std::string::npos && p3 != std::string::npos;
  ok = ok && rendered.substr(0, p1) == t.segments[0];
  ok = ok && rendered.substr(p1 + 3, p2 - p1 - 3) == t.segments[1];
  ok = ok && rendered.substr(p2 + 3, p3 - p2 - 3) == t.segments[2];
  ok = ok && rendered.substr(p3 + 3) == t.segments[3];
  verdict(9, "templates match the frozen text byte-for-byte outside placeholders", ok);
  REQUIRE(ok);
}

TEST_CASE("criterion 10: end-to-end determinism") {
  testutil::TempDir dir;
  auto suite = sim::make_random_suite(5, 77);
  std::vector<Episode> episodes;
  for (const auto& spec : suite) {
    episodes.push_back(sim::synthesize(spec));
    sim::script_mock_backend(spec, dir.path.string());
  }
  RunConfig config;
  config.mock_script_dir = dir.path.string();
  config.orch.backoff_base_ms = 1;

  auto run = [&] {
    MockBackend backend(config.mock_script_dir);
    return run_pipeline(episodes, paper_model(), config, backend);
  };
  auto a = run();
  auto b = run();
  std::string log_a, log_b;
  for (const auto& d : a.decisions) log_a += decision_to_json(d).dump() + "\n";
  for (const auto& d : b.decisions) log_b += decision_to_json(d).dump() + "\n";
  bool ok = !a.decisions.empty() && log_a == log_b &&
            report_to_json(a.report).dump() == report_to_json(b.report).dump() &&
            report_render(a.report) == report_render(b.report);
  verdict(10, "two identical mock runs produce identical decision logs and reports", ok);
  REQUIRE(ok);
}

TEST_CASE("criterion 11: generator distance calibration") {
  auto suite = sim::make_random_suite(500, 4242);
  double sum = 0.0;
  long n = 0;
  for (const auto& spec : suite) {
    Episode ep = sim::synthesize(spec);
    for (const auto& [tid, tt] : ep.ground_truth->tracks) {
      if (tt.expected_kind != TriggerKind::GazeShift) continue;
      const auto& frames = ep.tracks.at(tid);
      for (double p : tt.preamble_times) {
        size_t idx = static_cast<size_t>(std::lround(p * kNominalFps));
        sum += *frames[std::min(idx, frames.size() - 1)].distance_m;
        ++n;
      }
    }
  }
  double mean = sum / n;
  bool ok = n == 500 && std::abs(mean - 1.2) <= 0.1;
  std::printf("  (mean preamble distance %.3f m over %ld preambles)\n", mean, n);
  verdict(11, "mean gaze-preamble distance within 1.2 +/- 0.1 m over 500 scenarios", ok);
  REQUIRE(ok);
}
