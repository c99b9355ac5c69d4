#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace engage {

// COCO-17 keypoint order.
enum CocoKeypoint : int {
  kNose = 0,
  kLeftEye = 1,
  kRightEye = 2,
  kLeftEar = 3,
  kRightEar = 4,
  kLeftShoulder = 5,
  kRightShoulder = 6,
  kLeftElbow = 7,
  kRightElbow = 8,
  kLeftWrist = 9,
  kRightWrist = 10,
  kLeftHip = 11,
  kRightHip = 12,
  kLeftKnee = 13,
  kRightKnee = 14,
  kLeftAnkle = 15,
  kRightAnkle = 16
};

constexpr int kNumKeypoints = 17;
constexpr double kNominalFps = 15.0;
constexpr int kWindowFrames = 30;  // 2 s at 15 fps

enum class Action { Approach, Leave, Probe };
enum class Intent { Interact, NoIntent, Inconclusive };
enum class TriggerKind { GazeShift, ProxemicEntry };

inline const char* to_string(Action a) {
  switch (a) {
    case Action::Approach: return "Approach";
    case Action::Leave: return "Leave";
    case Action::Probe: return "Probe";
  }
  return "?";
}

inline const char* to_string(Intent i) {
  switch (i) {
    case Intent::Interact: return "Interact";
    case Intent::NoIntent: return "NoIntent";
    case Intent::Inconclusive: return "Inconclusive";
  }
  return "?";
}

inline const char* to_string(TriggerKind k) {
  switch (k) {
    case TriggerKind::GazeShift: return "GazeShift";
    case TriggerKind::ProxemicEntry: return "ProxemicEntry";
  }
  return "?";
}

inline std::optional<Action> action_from_string(const std::string& s) {
  if (s == "Approach") return Action::Approach;
  if (s == "Leave") return Action::Leave;
  if (s == "Probe") return Action::Probe;
  return std::nullopt;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double norm() const { return std::hypot(x, y); }
};

struct Keypoint {
  double x = 0.0;           // pixels
  double y = 0.0;           // pixels
  double confidence = 0.0;  // [0,1]

  Vec2 pos() const { return {x, y}; }
};

struct PoseFrame {
  double timestamp = 0.0;  // seconds from episode start
  std::string track_id;
  std::array<std::optional<Keypoint>, kNumKeypoints> keypoints;
  std::optional<double> distance_m;
};

// Ground truth attached to one track.
struct TrackTruth {
  std::vector<double> preamble_times;
  std::optional<TriggerKind> expected_kind;
  std::optional<Action> expected_action;
};

struct EpisodeTruth {
  std::optional<std::string> main_track_id;
  std::map<std::string, TrackTruth> tracks;
};

struct Episode {
  std::string episode_id;
  // Frames grouped by track, sorted by timestamp within each track.
  std::map<std::string, std::vector<PoseFrame>> tracks;
  std::optional<EpisodeTruth> ground_truth;

  size_t frame_count() const {
    size_t n = 0;
    for (const auto& [id, frames] : tracks) n += frames.size();
    return n;
  }
};

// Pose after re-centering at the shoulder midpoint and scaling by inverse
// torso length; unitless.
using NormalizedPose = std::array<std::optional<Vec2>, kNumKeypoints>;

}  // namespace engage
