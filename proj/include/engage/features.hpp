#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "engage/errors.hpp"
#include "engage/types.hpp"

namespace engage {

constexpr int kNumSignals = 7;
constexpr int kFeatureDim = 21;  // (max, min, std) per velocity series
constexpr int kMaxInterpGapFrames = 3;

// Head-geometry signals for one 2-second window, fixed order.
enum SignalIndex : int {
  kLeftEarNoseX = 0,
  kLeftEarNoseY = 1,
  kRightEarNoseX = 2,
  kRightEarNoseY = 3,
  kEyeSeparation = 4,
  kEarSeparation = 5,
  kEarSymmetry = 6
};

inline const char* signal_name(int i) {
  static const char* names[kNumSignals] = {
      "left_ear_nose_x", "left_ear_nose_y", "right_ear_nose_x", "right_ear_nose_y",
      "eye_separation",  "ear_separation",  "ear_symmetry"};
  return names[i];
}

struct SignalWindow {
  std::array<std::vector<double>, kNumSignals> signals;  // each length T
  std::string track_id;
  double window_start = 0.0;

  size_t length() const { return signals[0].size(); }
};

struct FeatureVector {
  std::array<double, kFeatureDim> values{};

  double max_of(int signal) const { return values[3 * signal + 0]; }
  double min_of(int signal) const { return values[3 * signal + 1]; }
  double std_of(int signal) const { return values[3 * signal + 2]; }
};

namespace detail {

// Linear interpolation across interior gaps of at most kMaxInterpGapFrames.
// Leading/trailing gaps and longer runs are not recoverable.
inline void interpolate_gaps(std::vector<std::optional<Vec2>>& series, const char* name) {
  const int n = static_cast<int>(series.size());
  int i = 0;
  while (i < n) {
    if (series[i]) {
      ++i;
      continue;
    }
    int gap_start = i;
    while (i < n && !series[i]) ++i;
    int gap_end = i;  // exclusive
    int gap_len = gap_end - gap_start;
    if (gap_start == 0 || gap_end == n || gap_len > kMaxInterpGapFrames)
      throw MissingHeadKeypointsError(std::string("keypoint '") + name +
                                      "' missing beyond interpolation reach");
    Vec2 a = *series[gap_start - 1];
    Vec2 b = *series[gap_end];
    for (int k = 0; k < gap_len; ++k) {
      double u = static_cast<double>(k + 1) / (gap_len + 1);
      series[gap_start + k] = a + (b - a) * u;
    }
  }
}

}  // namespace detail

// Per frame:
//   s1,s2 = LEar - Nose (x, y)      s3,s4 = REar - Nose (x, y)
//   s5 = ||LEye - REye||            s6 = ||LEar - REar||
//   s7 = min(||LEar-Nose||, ||REar-Nose||) / max(...)
inline SignalWindow compute_signals(const std::vector<NormalizedPose>& window,
                                    const std::string& track_id = {},
                                    double window_start = 0.0) {
  if (window.size() < static_cast<size_t>(kWindowFrames))
    throw ShortWindowError("window shorter than " + std::to_string(kWindowFrames) + " frames");

  const int head_kps[5] = {kNose, kLeftEye, kRightEye, kLeftEar, kRightEar};
  const char* head_names[5] = {"nose", "left_eye", "right_eye", "left_ear", "right_ear"};
  std::array<std::vector<std::optional<Vec2>>, 5> series;
  for (int s = 0; s < 5; ++s) {
    series[s].reserve(window.size());
    for (const auto& pose : window) series[s].push_back(pose[head_kps[s]]);
    detail::interpolate_gaps(series[s], head_names[s]);
  }

  SignalWindow out;
  out.track_id = track_id;
  out.window_start = window_start;
  for (auto& s : out.signals) s.reserve(window.size());
  for (size_t t = 0; t < window.size(); ++t) {
    Vec2 nose = *series[0][t], leye = *series[1][t], reye = *series[2][t];
    Vec2 lear = *series[3][t], rear = *series[4][t];
    Vec2 ln = lear - nose;
    Vec2 rn = rear - nose;
    out.signals[kLeftEarNoseX].push_back(ln.x);
    out.signals[kLeftEarNoseY].push_back(ln.y);
    out.signals[kRightEarNoseX].push_back(rn.x);
    out.signals[kRightEarNoseY].push_back(rn.y);
    out.signals[kEyeSeparation].push_back((leye - reye).norm());
    out.signals[kEarSeparation].push_back((lear - rear).norm());
    double a = ln.norm(), b = rn.norm();
    double lo = std::min(a, b), hi = std::max(a, b);
    out.signals[kEarSymmetry].push_back(hi > 0.0 ? lo / hi : 1.0);
  }
  return out;
}

// Velocities v[t] = s[t+1] - s[t] (length T-1), then (max, min, population std)
// per signal, concatenated in signal order.
inline FeatureVector compute_features(const SignalWindow& sw) {
  FeatureVector fv;
  for (int s = 0; s < kNumSignals; ++s) {
    const auto& sig = sw.signals[s];
    const int n = static_cast<int>(sig.size()) - 1;
    double vmax = -std::numeric_limits<double>::infinity();
    double vmin = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    std::vector<double> v(n);
    for (int t = 0; t < n; ++t) {
      v[t] = sig[t + 1] - sig[t];
      vmax = std::max(vmax, v[t]);
      vmin = std::min(vmin, v[t]);
      sum += v[t];
    }
    double mean = sum / n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= n;
    fv.values[3 * s + 0] = vmax;
    fv.values[3 * s + 1] = vmin;
    fv.values[3 * s + 2] = std::sqrt(var);
  }
  return fv;
}

}  // namespace engage
