#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "engage/errors.hpp"
#include "engage/features.hpp"
#include "engage/gbdt.hpp"
#include "engage/ingest.hpp"
#include "engage/types.hpp"

namespace engage {

struct GateConfig {
  double far_exclusion_m = 4.0;
  double personal_zone_m = 1.2;
  double window_s = 2.0;
  double group_merge_s = 1.0;
  double gaze_pad_s = 2.0;
  double proxemic_tail_s = 2.0;
  double stride_s = 2.0;
  double decision_threshold = 0.5;
  double confidence_floor = kDefaultConfidenceFloor;

  void validate() const {
    if (!(personal_zone_m > 0.0 && personal_zone_m < far_exclusion_m))
      throw ConfigError("require 0 < personal_zone_m < far_exclusion_m");
    for (double d : {window_s, group_merge_s, gaze_pad_s, proxemic_tail_s, stride_s})
      if (!(d > 0.0)) throw ConfigError("gate durations must be > 0");
  }
};

enum class OverlayColor { Blue, Orange, Green };

inline const char* to_string(OverlayColor c) {
  switch (c) {
    case OverlayColor::Blue: return "blue";
    case OverlayColor::Orange: return "orange";
    case OverlayColor::Green: return "green";
  }
  return "?";
}

struct PixelRect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
};

struct OverlayEntry {
  double frame_time = 0.0;
  PixelRect box;
  OverlayColor color = OverlayColor::Blue;
};

struct OverlayPlan {
  std::vector<OverlayEntry> entries;
};

struct TriggerEvent {
  std::string track_id;
  TriggerKind kind = TriggerKind::GazeShift;
  double trigger_time = 0.0;
  double clip_start = 0.0;
  double clip_end = 0.0;
  OverlayPlan overlay;
  std::optional<double> score;  // classifier probability, GazeShift only
};

// Keypoint extrema padded 10% per side; empty when no keypoint is visible.
inline std::optional<PixelRect> keypoint_box(const PoseFrame& frame,
                                             double confidence_floor = kDefaultConfidenceFloor) {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -x0, y1 = -x0;
  bool any = false;
  for (const auto& k : frame.keypoints) {
    if (!k || k->confidence < confidence_floor) continue;
    x0 = std::min(x0, k->x);
    y0 = std::min(y0, k->y);
    x1 = std::max(x1, k->x);
    y1 = std::max(y1, k->y);
    any = true;
  }
  if (!any) return std::nullopt;
  double pad_x = 0.1 * (x1 - x0), pad_y = 0.1 * (y1 - y0);
  return PixelRect{x0 - pad_x, y0 - pad_y, x1 + pad_x, y1 + pad_y};
}

enum class GateOutcomeKind { NoTrigger, ExcludedFar, GazeTrigger, ProxemicTrigger };

struct GateOutcome {
  GateOutcomeKind kind = GateOutcomeKind::NoTrigger;
  double trigger_time = 0.0;
  double score = 0.0;
  bool classifier_ran = false;
  std::string diagnostic;
};

// g(o_t) for one 2-second window of one track. Order of rules:
// far exclusion, then classifier, then proxemic entry (suppressed by any
// gaze detection in the same window).
inline GateOutcome gate_window(const std::vector<PoseFrame>& window,
                               const gbdt::GbdtModel& model, const GateConfig& config,
                               bool prior_gaze_in_window = false) {
  GateOutcome out;
  if (window.empty()) return out;

  double min_dist = std::numeric_limits<double>::infinity();
  bool any_dist = false;
  for (const auto& f : window) {
    if (f.distance_m) {
      min_dist = std::min(min_dist, *f.distance_m);
      any_dist = true;
    }
  }
  if (any_dist && min_dist > config.far_exclusion_m) {
    out.kind = GateOutcomeKind::ExcludedFar;
    return out;
  }

  bool gaze_positive = false;
  try {
    std::vector<NormalizedPose> poses;
    poses.reserve(window.size());
    for (const auto& f : window) poses.push_back(normalize_pose(f, config.confidence_floor));
    SignalWindow sw = compute_signals(poses, window.front().track_id, window.front().timestamp);
    FeatureVector fv = compute_features(sw);
    out.classifier_ran = true;
    out.score = gbdt::predict_proba(model, fv);
    gaze_positive = out.score >= config.decision_threshold;
  } catch (const Error& e) {
    out.diagnostic = e.what();
    out.kind = GateOutcomeKind::NoTrigger;
    return out;
  }

  if (gaze_positive) {
    out.kind = GateOutcomeKind::GazeTrigger;
    out.trigger_time = window.front().timestamp;
    return out;
  }
  if (!prior_gaze_in_window) {
    for (const auto& f : window) {
      if (f.distance_m && *f.distance_m <= config.personal_zone_m) {
        out.kind = GateOutcomeKind::ProxemicTrigger;
        out.trigger_time = f.timestamp;
        return out;
      }
    }
  }
  return out;
}

// Chain merge: consecutive events within group_merge_s collapse, keeping the
// earliest trigger time and the union clip span. GazeShift dominates mixes.
inline std::vector<TriggerEvent> group_triggers(const std::vector<TriggerEvent>& events,
                                                const GateConfig& config) {
  std::vector<TriggerEvent> merged;
  double last_constituent = 0.0;  // trigger time of the newest event absorbed
  for (const auto& e : events) {
    if (!merged.empty() && e.trigger_time - last_constituent <= config.group_merge_s &&
        e.track_id == merged.back().track_id) {
      TriggerEvent& prev = merged.back();
      prev.clip_start = std::min(prev.clip_start, e.clip_start);
      prev.clip_end = std::max(prev.clip_end, e.clip_end);
      if (e.kind == TriggerKind::GazeShift && prev.kind != TriggerKind::GazeShift) {
        prev.kind = TriggerKind::GazeShift;
        prev.score = e.score;
      } else if (e.kind == TriggerKind::GazeShift && e.score && prev.score) {
        prev.score = std::max(*prev.score, *e.score);
      }
      for (const auto& oe : e.overlay.entries) prev.overlay.entries.push_back(oe);
    } else {
      merged.push_back(e);
    }
    last_constituent = e.trigger_time;
  }
  return merged;
}

struct CallBudget {
  long windows_seen = 0;
  long classifier_runs = 0;
  long excluded_far_windows = 0;
  long probe_default_windows = 0;
  long gaze_triggers = 0;
  long proxemic_triggers = 0;
  long merged_events = 0;

  long trigger_windows() const { return gaze_triggers + proxemic_triggers; }
};

struct ProbeDefault {
  std::string track_id;
  double window_start = 0.0;
};

struct StageOneResult {
  std::vector<TriggerEvent> events;  // merged, sorted by (track, time)
  std::vector<ProbeDefault> probe_timeline;
  CallBudget budget;
  std::vector<std::string> diagnostics;
};

namespace detail {

struct EpisodeSpan {
  double start = 0.0, end = 0.0;
};

inline EpisodeSpan episode_span(const Episode& ep) {
  EpisodeSpan span{std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity()};
  for (const auto& [tid, frames] : ep.tracks) {
    if (frames.empty()) continue;
    span.start = std::min(span.start, frames.front().timestamp);
    span.end = std::max(span.end, frames.back().timestamp);
  }
  if (span.start > span.end) span = {0.0, 0.0};
  return span;
}

inline OverlayPlan build_overlay(const std::vector<PoseFrame>& frames, double clip_start,
                                 double clip_end, OverlayColor base,
                                 const std::vector<std::pair<double, double>>& green_spans,
                                 double confidence_floor) {
  OverlayPlan plan;
  for (const auto& f : frames) {
    if (f.timestamp < clip_start || f.timestamp > clip_end) continue;
    auto box = keypoint_box(f, confidence_floor);
    if (!box) continue;
    OverlayColor color = base;
    for (const auto& [s, e] : green_spans) {
      if (f.timestamp >= s && f.timestamp < e) {
        color = OverlayColor::Green;
        break;
      }
    }
    plan.entries.push_back({f.timestamp, *box, color});
  }
  return plan;
}

}  // namespace detail

// Runs the gate over every 2-second window of every track. Every window is
// accounted for as exactly one of {trigger, probe-default, excluded-far}.
inline StageOneResult run_stage_one(const Episode& episode, const gbdt::GbdtModel& model,
                                    const GateConfig& config) {
  config.validate();
  StageOneResult result;
  auto span = detail::episode_span(episode);
  const int window_frames = static_cast<int>(std::lround(config.window_s * kNominalFps));
  const int stride_frames =
      std::max(1, static_cast<int>(std::lround(config.stride_s * kNominalFps)));

  for (const auto& [track_id, frames] : episode.tracks) {
    std::vector<TriggerEvent> raw_events;
    // Spans of windows where the classifier fired, for overlay coloring.
    std::vector<std::pair<double, double>> green_spans;
    for (const auto& segment : split_segments(frames)) {
      for (size_t i = 0; i + window_frames <= segment.size(); i += stride_frames) {
        std::vector<PoseFrame> window(segment.begin() + i,
                                      segment.begin() + i + window_frames);
        ++result.budget.windows_seen;
        bool prior_gaze = false;
        double wstart = window.front().timestamp;
        double wend = wstart + config.window_s;
        for (const auto& prev : raw_events)
          if (prev.kind == TriggerKind::GazeShift && prev.trigger_time >= wstart &&
              prev.trigger_time < wend)
            prior_gaze = true;

        GateOutcome out = gate_window(window, model, config, prior_gaze);
        if (out.classifier_ran) ++result.budget.classifier_runs;
        if (!out.diagnostic.empty())
          result.diagnostics.push_back(track_id + " @" + std::to_string(wstart) + ": " +
                                       out.diagnostic);
        switch (out.kind) {
          case GateOutcomeKind::ExcludedFar:
            ++result.budget.excluded_far_windows;
            break;
          case GateOutcomeKind::NoTrigger:
            ++result.budget.probe_default_windows;
            result.probe_timeline.push_back({track_id, wstart});
            break;
          case GateOutcomeKind::GazeTrigger: {
            ++result.budget.gaze_triggers;
            TriggerEvent e;
            e.track_id = track_id;
            e.kind = TriggerKind::GazeShift;
            e.trigger_time = out.trigger_time;
            e.clip_start = std::max(span.start, out.trigger_time - config.gaze_pad_s);
            e.clip_end =
                std::min(span.end, out.trigger_time + config.window_s + config.gaze_pad_s);
            e.score = out.score;
            raw_events.push_back(e);
            green_spans.emplace_back(wstart, wend);
            break;
          }
          case GateOutcomeKind::ProxemicTrigger: {
            ++result.budget.proxemic_triggers;
            TriggerEvent e;
            e.track_id = track_id;
            e.kind = TriggerKind::ProxemicEntry;
            e.trigger_time = out.trigger_time;
            e.clip_start = std::max(span.start, out.trigger_time);
            e.clip_end = std::min(span.end, out.trigger_time + config.proxemic_tail_s);
            raw_events.push_back(e);
            break;
          }
        }
      }
    }
    auto merged = group_triggers(raw_events, config);
    for (auto& e : merged) {
      OverlayColor base = e.kind == TriggerKind::GazeShift ? OverlayColor::Blue
                                                           : OverlayColor::Orange;
      e.overlay = detail::build_overlay(frames, e.clip_start, e.clip_end, base, green_spans,
                                        config.confidence_floor);
      result.events.push_back(e);
    }
  }
  result.budget.merged_events = static_cast<long>(result.events.size());
  return result;
}

// Distance-only baseline: one trigger at the first personal-zone entry per
// track, clip = the 2 seconds after entry. No classifier involvement.
inline std::vector<TriggerEvent> baseline_distance_only(const Episode& episode,
                                                        const GateConfig& config) {
  std::vector<TriggerEvent> events;
  auto span = detail::episode_span(episode);
  for (const auto& [track_id, frames] : episode.tracks) {
    for (const auto& f : frames) {
      if (f.distance_m && *f.distance_m <= config.personal_zone_m) {
        TriggerEvent e;
        e.track_id = track_id;
        e.kind = TriggerKind::ProxemicEntry;
        e.trigger_time = f.timestamp;
        e.clip_start = f.timestamp;
        e.clip_end = std::min(span.end, f.timestamp + config.proxemic_tail_s);
        e.overlay = detail::build_overlay(frames, e.clip_start, e.clip_end,
                                          OverlayColor::Orange, {}, config.confidence_floor);
        events.push_back(e);
        break;
      }
    }
  }
  return events;
}

}  // namespace engage
