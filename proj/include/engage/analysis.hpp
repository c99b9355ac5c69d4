#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "engage/types.hpp"

namespace engage {

struct EvidenceLine {
  double timestamp_s = 0.0;  // seconds into the clip
  std::string cue;
};

struct Analysis {
  std::string raw_text;
  std::string answer;
  std::vector<EvidenceLine> evidence;
  Intent intent = Intent::Inconclusive;
  bool malformed = false;
};

namespace detail {

inline std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Parses "[mm:ss]" at the start of `s`; returns seconds.
inline std::optional<double> parse_mmss(const std::string& s, size_t* consumed = nullptr) {
  size_t i = s.find('[');
  if (i == std::string::npos) return std::nullopt;
  size_t j = s.find(']', i);
  if (j == std::string::npos) return std::nullopt;
  std::string stamp = s.substr(i + 1, j - i - 1);
  size_t colon = stamp.find(':');
  if (colon == std::string::npos) return std::nullopt;
  try {
    int mm = std::stoi(stamp.substr(0, colon));
    double ss = std::stod(stamp.substr(colon + 1));
    if (consumed) *consumed = j + 1;
    return mm * 60.0 + ss;
  } catch (...) {
    return std::nullopt;
  }
}

}  // namespace detail

// Frozen keyword table for intent mapping (see README). Negation and
// disinterest phrases are checked before interaction phrases.
inline Intent intent_from_text(const std::string& text) {
  std::string t = detail::lowercase(text);
  if (t.find("inconclusive") != std::string::npos) return Intent::Inconclusive;
  static const char* no_intent_kw[] = {
      "no intent",        "not want to interact", "does not want", "doesn't want",
      "disinterest",      "uninterested",         "not interested", "ignores",
      "ignoring",         "ignored",              "looks away and continues",
      "turns away",       "avoids the robot",     "rejecting",      "dismissive",
      "no desire to interact"};
  for (const char* kw : no_intent_kw)
    if (t.find(kw) != std::string::npos) return Intent::NoIntent;
  static const char* interact_kw[] = {
      "wants to interact", "want to interact",  "intends to interact",
      "interested in",     "interest in",       "showing interest",
      "engage with",       "welcoming",         "invites",
      "inviting",          "waves",             "waving",
      "wave",              "nods",              "beckons",
      "holds out trash",   "offers trash",      "sustained gaze",
      "leans toward"};
  for (const char* kw : interact_kw)
    if (t.find(kw) != std::string::npos) return Intent::Interact;
  return Intent::Inconclusive;
}

// Extracts the Answer line, [mm:ss] evidence lines, and the intent. Evidence
// outside the clip span (plus a 1-second grace window) is dropped. Returns a
// malformed marker instead of throwing.
inline Analysis parse_analysis(const std::string& text,
                               std::optional<double> clip_duration_s = std::nullopt) {
  Analysis a;
  a.raw_text = text;
  if (detail::trim(text).empty()) {
    a.malformed = true;
    return a;
  }

  std::string intent_source;
  size_t oi = text.rfind("Overall intention:");
  if (oi != std::string::npos) {
    intent_source = text.substr(oi);
  } else {
    size_t ans = text.find("Answer:");
    if (ans == std::string::npos) {
      a.malformed = true;
      return a;
    }
    size_t end = text.find("Evidence:", ans);
    a.answer = detail::trim(text.substr(ans + 7, end == std::string::npos
                                                     ? std::string::npos
                                                     : end - ans - 7));
    intent_source = a.answer;
  }
  a.intent = intent_from_text(intent_source);

  // Evidence lines: "Evidence: [mm:ss] ..." or log bullets "- [mm:ss] ...".
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    size_t ev = line.find("Evidence:");
    size_t bracket = line.find('[');
    if (ev == std::string::npos && bracket == std::string::npos) continue;
    std::string rest = ev != std::string::npos ? line.substr(ev + 9) : line;
    size_t consumed = 0;
    auto ts = detail::parse_mmss(rest, &consumed);
    if (!ts) continue;
    if (clip_duration_s && (*ts < -1.0 || *ts > *clip_duration_s + 1.0)) continue;
    a.evidence.push_back({*ts, detail::trim(rest.substr(consumed))});
  }
  return a;
}

}  // namespace engage
