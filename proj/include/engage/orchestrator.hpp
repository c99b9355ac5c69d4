#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "engage/analysis.hpp"
#include "engage/backend.hpp"
#include "engage/errors.hpp"
#include "engage/gate.hpp"
#include "engage/prompts.hpp"
#include "engage/types.hpp"

namespace engage {

enum class Strategy { SelfConsistency, SelfCritique };

inline const char* to_string(Strategy s) {
  return s == Strategy::SelfConsistency ? "SelfConsistency" : "SelfCritique";
}

struct OrchestratorConfig {
  Strategy strategy = Strategy::SelfConsistency;
  int k = 5;
  double temperature = 0.7;
  double eta = 0.25;          // u_SC deferral threshold
  int min_wellformed = 3;     // fewer well-formed analyses than this defers
  std::string model_id = "video-vlm";
  int transport_retries = 2;
  int backoff_base_ms = 100;

  void validate() const {
    if (k < 1) throw ConfigError("K must be >= 1");
    if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (eta < 0.0 || eta > 1.0) throw ConfigError("eta must be in [0,1]");
  }
};

struct VerificationIssue {
  std::string issue;
  std::vector<std::string> quotes;
  std::string verdict;  // supported | refuted | inconclusive | ""
};

struct AnalysisBundle {
  std::vector<Analysis> analyses;
  Strategy strategy = Strategy::SelfConsistency;
  std::string synthesized_log;
  std::map<Intent, int> intent_votes;
  double u_sc = 0.0;
  std::vector<VerificationIssue> verification;
  std::optional<Intent> intent;  // absent on deferral
  bool deferred = false;
  std::string deferral_reason;
};

enum class Provenance { GateDefault, UncertaintyDeferral, CritiqueInconclusive, ActionPrompt };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::GateDefault: return "GateDefault";
    case Provenance::UncertaintyDeferral: return "UncertaintyDeferral";
    case Provenance::CritiqueInconclusive: return "CritiqueInconclusive";
    case Provenance::ActionPrompt: return "ActionPrompt";
  }
  return "?";
}

struct Decision {
  Action action = Action::Probe;
  std::string justification;
  Provenance provenance = Provenance::GateDefault;
  std::optional<TriggerEvent> source_event;
};

namespace detail {

inline BackendRequest make_request(const TriggerEvent& event, PromptStage stage,
                                   const std::string& prompt, const OrchestratorConfig& cfg,
                                   const ClipRef& clip, int sample_index) {
  BackendRequest req;
  req.model_id = cfg.model_id;
  req.clip = clip;
  req.prompt = prompt;
  req.temperature = cfg.temperature;
  req.event_kind = event.kind;
  req.stage = stage;
  req.sample_index = sample_index;
  return req;
}

inline std::string complete_with_retry(Backend& backend, const BackendRequest& req,
                                       const OrchestratorConfig& cfg) {
  int attempt = 0;
  for (;;) {
    try {
      return backend.complete(req);
    } catch (const BackendError&) {
      if (attempt >= cfg.transport_retries) throw;
      std::this_thread::sleep_for(
          std::chrono::milliseconds(cfg.backoff_base_ms << attempt));
      ++attempt;
    }
  }
}

}  // namespace detail

// K independent analysis requests at temperature tau. A malformed response is
// re-requested once, then kept with its malformed flag set.
inline std::vector<Analysis> sample_analyses(const TriggerEvent& event, Backend& backend,
                                             const OrchestratorConfig& cfg,
                                             const ClipRef& clip) {
  cfg.validate();
  PromptStage stage = event.kind == TriggerKind::GazeShift
                          ? PromptStage::IndependentGaze
                          : PromptStage::IndependentProxemics;
  std::string prompt = build_prompt(event, stage);
  double duration = event.clip_end - event.clip_start;

  std::vector<Analysis> analyses;
  analyses.reserve(cfg.k);
  int malformed_count = 0;
  for (int i = 0; i < cfg.k; ++i) {
    auto req = detail::make_request(event, stage, prompt, cfg, clip, i);
    Analysis a = parse_analysis(detail::complete_with_retry(backend, req, cfg), duration);
    if (a.malformed) {
      a = parse_analysis(detail::complete_with_retry(backend, req, cfg), duration);
    }
    if (a.malformed) ++malformed_count;
    analyses.push_back(std::move(a));
  }
  if (malformed_count == cfg.k) throw AllMalformedError("all K analyses malformed");
  return analyses;
}

inline std::map<Intent, int> count_votes(const std::vector<Analysis>& analyses) {
  std::map<Intent, int> votes;
  for (const auto& a : analyses)
    if (!a.malformed) ++votes[a.intent];
  return votes;
}

// u_SC = 1 - max_s n_s / W over well-formed analyses (equals the K-denominator
// form when all K are well-formed).
inline double self_consistency_uncertainty(const std::map<Intent, int>& votes) {
  int total = 0, best = 0;
  for (const auto& [intent, n] : votes) {
    total += n;
    best = std::max(best, n);
  }
  return total == 0 ? 1.0 : 1.0 - static_cast<double>(best) / total;
}

namespace detail {

inline std::string extract_final_log(const std::string& text, const char* marker) {
  size_t i = text.find(marker);
  return i == std::string::npos ? text : text.substr(i);
}

inline std::optional<Intent> extract_overall_intention(const std::string& text) {
  size_t i = text.rfind("Overall intention:");
  if (i == std::string::npos) return std::nullopt;
  std::string tail = text.substr(i);
  std::string lower = lowercase(tail);
  if (lower.find("no intent") != std::string::npos) return Intent::NoIntent;
  if (lower.find("inconclusive") != std::string::npos) return Intent::Inconclusive;
  if (lower.find("interact") != std::string::npos) return Intent::Interact;
  return std::nullopt;
}

// Parses the contradiction-stage output into issues with candidate quotes.
inline std::vector<VerificationIssue> parse_issues(const std::string& text) {
  std::vector<VerificationIssue> issues;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    size_t ip = line.find("issue:");
    size_t qp = line.find("quote:");
    size_t vp = line.find("video_check:");
    if (ip != std::string::npos && line.find("resolution") == std::string::npos) {
      VerificationIssue vi;
      vi.issue = trim(line.substr(ip + 6));
      issues.push_back(vi);
    } else if (qp != std::string::npos && !issues.empty()) {
      std::string q = trim(line.substr(qp + 6));
      if (q.size() >= 2 && q.front() == '"' && q.back() == '"')
        q = q.substr(1, q.size() - 2);
      issues.back().quotes.push_back(q);
    } else if (vp != std::string::npos && !issues.empty()) {
      std::string v = lowercase(trim(line.substr(vp + 12)));
      // last candidate verdict wins unless an earlier one was inconclusive
      if (issues.back().verdict != "inconclusive") issues.back().verdict = v;
    }
  }
  return issues;
}

inline bool is_intent_bearing(const VerificationIssue& issue) {
  if (intent_from_text(issue.issue) != Intent::Inconclusive) return true;
  for (const auto& q : issue.quotes)
    if (intent_from_text(q) != Intent::Inconclusive) return true;
  return false;
}

}  // namespace detail

// Self-consistency synthesis: vote, defer when u_SC > eta, otherwise issue the
// majority-vote prompt and read the synthesized log's overall intention.
inline AnalysisBundle self_consistency(const TriggerEvent& event,
                                       std::vector<Analysis> analyses, Backend& backend,
                                       const OrchestratorConfig& cfg, const ClipRef& clip) {
  AnalysisBundle bundle;
  bundle.strategy = Strategy::SelfConsistency;
  bundle.analyses = std::move(analyses);
  bundle.intent_votes = count_votes(bundle.analyses);
  bundle.u_sc = self_consistency_uncertainty(bundle.intent_votes);

  int wellformed = 0;
  for (const auto& [intent, n] : bundle.intent_votes) wellformed += n;
  if (wellformed < cfg.min_wellformed) {
    bundle.deferred = true;
    bundle.deferral_reason = "fewer than " + std::to_string(cfg.min_wellformed) +
                             " well-formed analyses";
    return bundle;
  }
  if (bundle.u_sc > cfg.eta) {
    bundle.deferred = true;
    bundle.deferral_reason = "u_sc exceeds eta";
    return bundle;
  }

  PromptContext ctx;
  for (const auto& a : bundle.analyses) ctx.analyses.push_back(a.raw_text);
  std::string prompt = build_prompt(event, PromptStage::MajorityVote, ctx);
  auto req = detail::make_request(event, PromptStage::MajorityVote, prompt, cfg, clip, 0);
  std::string response = detail::complete_with_retry(backend, req, cfg);
  bundle.synthesized_log = detail::extract_final_log(response, "Final log");
  auto intent = detail::extract_overall_intention(response);
  bundle.intent = intent ? *intent : Intent::Inconclusive;
  return bundle;
}

// Self-critique synthesis: contradiction extraction, then video-grounded
// verification. Defers when the verification is inconclusive on an
// intent-bearing issue or in its overall intention.
inline AnalysisBundle self_critique(const TriggerEvent& event, std::vector<Analysis> analyses,
                                    Backend& backend, const OrchestratorConfig& cfg,
                                    const ClipRef& clip) {
  AnalysisBundle bundle;
  bundle.strategy = Strategy::SelfCritique;
  bundle.analyses = std::move(analyses);
  bundle.intent_votes = count_votes(bundle.analyses);
  bundle.u_sc = self_consistency_uncertainty(bundle.intent_votes);

  PromptContext ctx;
  for (const auto& a : bundle.analyses) ctx.analyses.push_back(a.raw_text);
  std::string c_prompt = build_prompt(event, PromptStage::Contradiction, ctx);
  auto c_req = detail::make_request(event, PromptStage::Contradiction, c_prompt, cfg, clip, 0);
  std::string contradiction_text = detail::complete_with_retry(backend, c_req, cfg);
  ctx.contradiction_text = contradiction_text;

  std::string v_prompt = build_prompt(event, PromptStage::Verify, ctx);
  auto v_req = detail::make_request(event, PromptStage::Verify, v_prompt, cfg, clip, 0);
  std::string verification_text = detail::complete_with_retry(backend, v_req, cfg);

  bundle.verification = detail::parse_issues(verification_text);
  bundle.synthesized_log = detail::extract_final_log(verification_text, "Final log");
  auto intent = detail::extract_overall_intention(verification_text);
  if (!intent) {
    bundle.deferred = true;
    bundle.deferral_reason = "unparseable verification output";
    return bundle;
  }
  if (*intent == Intent::Inconclusive) {
    bundle.deferred = true;
    bundle.deferral_reason = "overall intention inconclusive";
    return bundle;
  }
  for (const auto& issue : bundle.verification) {
    if (issue.verdict == "inconclusive" && detail::is_intent_bearing(issue)) {
      bundle.deferred = true;
      bundle.deferral_reason = "intent-bearing claim inconclusive: " + issue.issue;
      return bundle;
    }
  }
  bundle.intent = *intent;
  return bundle;
}

// Final action via the action prompt; unparseable responses fall back to
// Probe with the diagnostic carried in the justification.
inline Decision select_action(const TriggerEvent& event, const AnalysisBundle& bundle,
                              Backend& backend, const OrchestratorConfig& cfg,
                              const ClipRef& clip) {
  if (bundle.deferred || !bundle.intent)
    throw MissingContextError("select_action requires a non-deferred bundle");
  PromptContext ctx;
  ctx.synthesized_log = bundle.synthesized_log;
  std::string prompt = build_prompt(event, PromptStage::Action, ctx);
  auto req = detail::make_request(event, PromptStage::Action, prompt, cfg, clip, 0);
  std::string response = detail::complete_with_retry(backend, req, cfg);

  Decision d;
  d.provenance = Provenance::ActionPrompt;
  d.source_event = event;
  d.justification = detail::trim(response);
  std::string lower = detail::lowercase(response);
  if (lower.find("approach to interact") != std::string::npos)
    d.action = Action::Approach;
  else if (lower.find("leave, do not interact") != std::string::npos)
    d.action = Action::Leave;
  else if (lower.find("keep probing") != std::string::npos)
    d.action = Action::Probe;
  else if (lower.find("approach") != std::string::npos)
    d.action = Action::Approach;
  else if (lower.find("leave") != std::string::npos)
    d.action = Action::Leave;
  else {
    d.action = Action::Probe;
    d.justification = "unparseable action response; defaulting to Probe: " +
                      d.justification;
  }
  return d;
}

struct StageTwoOutcome {
  AnalysisBundle bundle;
  Decision decision;
};

// Full Stage II run for one trigger event.
inline StageTwoOutcome run_stage_two(const TriggerEvent& event, Backend& backend,
                                     const OrchestratorConfig& cfg, const ClipRef& clip) {
  cfg.validate();
  StageTwoOutcome out;
  auto analyses = sample_analyses(event, backend, cfg, clip);
  out.bundle = cfg.strategy == Strategy::SelfConsistency
                   ? self_consistency(event, std::move(analyses), backend, cfg, clip)
                   : self_critique(event, std::move(analyses), backend, cfg, clip);
  if (out.bundle.deferred) {
    out.decision.action = Action::Probe;
    out.decision.provenance = cfg.strategy == Strategy::SelfConsistency
                                  ? Provenance::UncertaintyDeferral
                                  : Provenance::CritiqueInconclusive;
    out.decision.justification = out.bundle.deferral_reason;
    out.decision.source_event = event;
  } else {
    out.decision = select_action(event, out.bundle, backend, cfg, clip);
  }
  return out;
}

}  // namespace engage
