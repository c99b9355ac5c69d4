#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "engage/errors.hpp"
#include "engage/types.hpp"

namespace engage {

constexpr double kDefaultConfidenceFloor = 0.3;
constexpr double kTorsoEpsilon = 1e-6;
constexpr double kTrackGapSplitS = 0.5;
constexpr int kEpisodeFormatVersion = 1;

namespace detail {

inline PoseFrame parse_record(const nlohmann::json& j, int line_no, std::string& episode_id) {
  auto fail = [line_no](const std::string& field, const std::string& why) -> SchemaError {
    std::ostringstream os;
    os << "line " << line_no << ": field '" << field << "': " << why;
    return SchemaError(os.str());
  };
  if (!j.contains("v") || j.at("v").get<int>() != kEpisodeFormatVersion)
    throw fail("v", "missing or unsupported version");
  for (const char* f : {"episode_id", "track_id", "t", "kp"})
    if (!j.contains(f)) throw fail(f, "missing");

  std::string ep = j.at("episode_id").get<std::string>();
  if (episode_id.empty())
    episode_id = ep;
  else if (ep != episode_id)
    throw fail("episode_id", "mixed episode ids in one file");

  PoseFrame frame;
  frame.track_id = j.at("track_id").get<std::string>();
  frame.timestamp = j.at("t").get<double>();
  if (!std::isfinite(frame.timestamp) || frame.timestamp < 0.0)
    throw fail("t", "must be finite and non-negative");

  const auto& kp = j.at("kp");
  if (!kp.is_array() || kp.size() != kNumKeypoints)
    throw fail("kp", "expected array of 17 entries");
  for (int i = 0; i < kNumKeypoints; ++i) {
    const auto& e = kp.at(i);
    if (e.is_null()) continue;
    if (!e.is_array() || e.size() != 3) throw fail("kp", "entry must be [x,y,c] or null");
    Keypoint k{e.at(0).get<double>(), e.at(1).get<double>(), e.at(2).get<double>()};
    if (!std::isfinite(k.x) || !std::isfinite(k.y)) throw fail("kp", "non-finite coordinate");
    if (k.confidence < 0.0 || k.confidence > 1.0) throw fail("kp", "confidence outside [0,1]");
    frame.keypoints[i] = k;
  }
  if (j.contains("dist_m") && !j.at("dist_m").is_null()) {
    double d = j.at("dist_m").get<double>();
    if (!(d > 0.0) || !std::isfinite(d)) throw fail("dist_m", "must be finite and > 0");
    frame.distance_m = d;
  }
  return frame;
}

}  // namespace detail

// Labels sidecar, `<episode>.labels`.
inline EpisodeTruth load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open labels file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("labels file " + path + ": " + e.what());
  }
  EpisodeTruth truth;
  if (j.contains("main_track_id") && !j.at("main_track_id").is_null())
    truth.main_track_id = j.at("main_track_id").get<std::string>();
  if (j.contains("tracks")) {
    for (const auto& [tid, tj] : j.at("tracks").items()) {
      TrackTruth tt;
      if (tj.contains("preamble_times"))
        tt.preamble_times = tj.at("preamble_times").get<std::vector<double>>();
      if (tj.contains("expected_kind") && !tj.at("expected_kind").is_null()) {
        std::string k = tj.at("expected_kind").get<std::string>();
        if (k == "GazeShift")
          tt.expected_kind = TriggerKind::GazeShift;
        else if (k == "ProxemicEntry")
          tt.expected_kind = TriggerKind::ProxemicEntry;
        else
          throw SchemaError("labels: unknown expected_kind '" + k + "'");
      }
      if (tj.contains("expected_action") && !tj.at("expected_action").is_null()) {
        auto a = action_from_string(tj.at("expected_action").get<std::string>());
        if (!a) throw SchemaError("labels: unknown expected_action");
        tt.expected_action = a;
      }
      truth.tracks[tid] = tt;
    }
  }
  return truth;
}

// Newline-delimited records, one per (track, frame); frames end up sorted by
// (track_id, timestamp). A `<path>.labels` sidecar is picked up when present.
inline Episode load_episode(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open episode file: " + path);

  Episode ep;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      std::ostringstream os;
      os << path << ": line " << line_no << ": " << e.what();
      throw ParseError(os.str());
    }
    PoseFrame frame = detail::parse_record(j, line_no, ep.episode_id);
    ep.tracks[frame.track_id].push_back(frame);
  }
  for (auto& [tid, frames] : ep.tracks) {
    std::stable_sort(frames.begin(), frames.end(),
                     [](const PoseFrame& a, const PoseFrame& b) { return a.timestamp < b.timestamp; });
  }

  std::ifstream labels_probe(path + ".labels");
  if (labels_probe.good()) {
    labels_probe.close();
    ep.ground_truth = load_labels(path + ".labels");
    for (const auto& [tid, tt] : ep.ground_truth->tracks) {
      if (!ep.tracks.count(tid))
        throw SchemaError("labels reference unknown track_id '" + tid + "'");
    }
  }
  return ep;
}

inline void save_episode(const Episode& ep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write episode file: " + path);
  for (const auto& [tid, frames] : ep.tracks) {
    for (const auto& f : frames) {
      nlohmann::json kp = nlohmann::json::array();
      for (const auto& k : f.keypoints) {
        if (k)
          kp.push_back({k->x, k->y, k->confidence});
        else
          kp.push_back(nullptr);
      }
      nlohmann::json j{{"v", kEpisodeFormatVersion},
                       {"episode_id", ep.episode_id},
                       {"track_id", tid},
                       {"t", f.timestamp},
                       {"kp", kp}};
      if (f.distance_m) j["dist_m"] = *f.distance_m;
      out << j.dump() << "\n";
    }
  }
  if (ep.ground_truth) {
    nlohmann::json j;
    if (ep.ground_truth->main_track_id) j["main_track_id"] = *ep.ground_truth->main_track_id;
    nlohmann::json tracks = nlohmann::json::object();
    for (const auto& [tid, tt] : ep.ground_truth->tracks) {
      nlohmann::json tj{{"preamble_times", tt.preamble_times}};
      if (tt.expected_kind) tj["expected_kind"] = to_string(*tt.expected_kind);
      if (tt.expected_action) tj["expected_action"] = to_string(*tt.expected_action);
      tracks[tid] = tj;
    }
    j["tracks"] = tracks;
    std::ofstream lout(path + ".labels");
    lout << j.dump(2) << "\n";
  }
}

// P' = (P - midpoint(shoulders)) / ||midpoint(shoulders) - midpoint(hips)||.
// Anchor keypoints below the confidence floor count as absent.
inline NormalizedPose normalize_pose(const PoseFrame& frame,
                                     double confidence_floor = kDefaultConfidenceFloor) {
  auto anchor = [&](int idx, const char* name) -> Vec2 {
    const auto& k = frame.keypoints[idx];
    if (!k || k->confidence < confidence_floor)
      throw MissingLandmarkError(std::string("anchor keypoint absent: ") + name);
    return k->pos();
  };
  Vec2 ls = anchor(kLeftShoulder, "left shoulder");
  Vec2 rs = anchor(kRightShoulder, "right shoulder");
  Vec2 lh = anchor(kLeftHip, "left hip");
  Vec2 rh = anchor(kRightHip, "right hip");

  Vec2 shoulder_mid = (ls + rs) * 0.5;
  Vec2 hip_mid = (lh + rh) * 0.5;
  double torso = (shoulder_mid - hip_mid).norm();
  if (torso < kTorsoEpsilon) throw DegenerateTorsoError("torso length below epsilon");

  NormalizedPose out;
  for (int i = 0; i < kNumKeypoints; ++i) {
    const auto& k = frame.keypoints[i];
    if (!k || k->confidence < confidence_floor) continue;
    out[i] = (k->pos() - shoulder_mid) * (1.0 / torso);
  }
  return out;
}

// Mean of valid cells in a window centered on the shoulder midpoint.
// Invalid cells are NaN or non-positive.
inline double estimate_distance(const std::vector<std::vector<double>>& depth_patch,
                                int center_row, int center_col, int window = 5) {
  if (depth_patch.empty()) throw AllInvalidPatchError("empty depth patch");
  int half = window / 2;
  double sum = 0.0;
  int n = 0;
  for (int r = center_row - half; r <= center_row + half; ++r) {
    if (r < 0 || r >= static_cast<int>(depth_patch.size())) continue;
    const auto& row = depth_patch[r];
    for (int c = center_col - half; c <= center_col + half; ++c) {
      if (c < 0 || c >= static_cast<int>(row.size())) continue;
      double d = row[c];
      if (std::isfinite(d) && d > 0.0) {
        sum += d;
        ++n;
      }
    }
  }
  if (n == 0) throw AllInvalidPatchError("no valid depth cell in neighborhood");
  return sum / n;
}

// Splits one track's frames wherever consecutive timestamps are more than
// kTrackGapSplitS apart, so windows never straddle a recording gap.
inline std::vector<std::vector<PoseFrame>> split_segments(const std::vector<PoseFrame>& frames,
                                                          double gap_s = kTrackGapSplitS) {
  std::vector<std::vector<PoseFrame>> segments;
  for (const auto& f : frames) {
    if (segments.empty() || f.timestamp - segments.back().back().timestamp > gap_s)
      segments.emplace_back();
    segments.back().push_back(f);
  }
  return segments;
}

}  // namespace engage
