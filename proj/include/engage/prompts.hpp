#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "engage/errors.hpp"
#include "engage/gate.hpp"
#include "engage/types.hpp"

namespace engage {

enum class PromptStage {
  IndependentGaze,
  IndependentProxemics,
  Contradiction,
  Verify,
  MajorityVote,
  Action
};

inline const char* to_string(PromptStage s) {
  switch (s) {
    case PromptStage::IndependentGaze: return "gaze_analysis";
    case PromptStage::IndependentProxemics: return "proxemics_analysis";
    case PromptStage::Contradiction: return "contradiction";
    case PromptStage::Verify: return "verify";
    case PromptStage::MajorityVote: return "majority_vote";
    case PromptStage::Action: return "action";
  }
  return "?";
}

// A prompt is frozen literal segments interleaved with named placeholders:
// render(values) = seg[0] + values[0] + seg[1] + ... + seg.back().
struct PromptTemplate {
  std::vector<std::string> segments;
  std::vector<std::string> placeholders;  // size = segments.size() - 1

  std::string render(const std::vector<std::string>& values) const {
    if (values.size() != placeholders.size())
      throw MissingContextError("prompt placeholder count mismatch");
    std::string out = segments[0];
    for (size_t i = 0; i < values.size(); ++i) {
      out += values[i];
      out += segments[i + 1];
    }
    return out;
  }
};

namespace prompts {

inline const PromptTemplate& independent_gaze() {
  static const PromptTemplate t{
      {"You are a robot whose job is to approach people so they can throw away their "
       "trash. You are approaching the person shown in the video in the blue bounding "
       "box. The video features the person's subtle non-verbal behaviors towards your "
       "approach. The camera is co-located with the robot; 'toward the robot' == 'toward "
       "the camera'. The bounding box may flicker or disappear, but you should focus on "
       "the person in the bounding box throughout the video."
       "Task: Reason step by step. Try to capture all behaviors of the person of "
       "interest. Focus on the person's subtle body language. Does the person want to "
       "interact with you?"
       "If there are concrete actions that you can pinpoint, you should cite them as "
       "evidence. Make sure the evidence is directly visible in the video."
       "Pay special attention when the bounding box turns green, which may suggest a "
       "potential cue of interest."
       "Note that the robot is also moving/turning, so the person's relative position "
       "may change. Make sure to distinguish between the person's movement and the "
       "robot's movement."
       "output format (use exactly):"
       "Answer: [The person's body language..., showing ...]"
       "Evidence: [mm:ss] <brief micro-cues>"},
      {}};
  return t;
}

inline const PromptTemplate& independent_proxemics() {
  static const PromptTemplate t{
      {"You are a robot whose job is to approach people so they can throw away their "
       "trash. You are approaching the person shown in the video in the orange bounding "
       "box. You are currently in that person's personal zone. The camera is co-located "
       "with the robot; 'toward the robot' == 'toward the camera'."
       "The bounding box may flicker or disappear, but you should focus on the person in "
       "the bounding box throughout the video."
       "Task: Reason step by step. Try to capture all behaviors of the person of "
       "interest. Focus on the person's subtle body language. Does the person want to "
       "interact with you?"
       "If there are concrete actions that you can pinpoint, you should cite them as "
       "evidence. Make sure the evidence is directly visible in the video."
       "Pay special attention when the bounding box turns green, which may suggest a "
       "potential cue of interest."
       "Note that the robot is also moving/turning, so the person's relative position "
       "may change. Make sure to distinguish between the person's movement and the "
       "robot's movement."
       "output format (use exactly):"
       "Answer: [The person's body language..., showing ...]"
       "Evidence: [mm:ss] <brief micro-cues>"},
      {}};
  return t;
}

inline const PromptTemplate& contradiction() {
  static const PromptTemplate t{
      {"You are given 5 independent analyses of a video showing a blue/orange-box person "
       "reacting to a robot. Your job is to extract all contradictions, disagreements, "
       "or disputed claims among the analyses."
       "Do NOT attempt to resolve or fact-check them."
       "For each contradiction, list (format exactly, no JSON is necessary):"
       " - issue: <what is disputed>"
       "   candidates:"
       "   - analysis: <n>"
       "     quote: \"<verbatim>\""
       "   ... (repeat for each analysis with a distinct claim)"
       "Only include issues where there is a clear disagreement or mutually exclusive "
       "claim."
       "If all analyses agree, output: contradictions: []"
       "Here are the 5 analyses:",
       ""},
      {"analyses"}};
  return t;
}

inline const PromptTemplate& verify() {
  static const PromptTemplate t{
      {"You are given 5 independent analyses of a video showing the person in the "
       "blue/orange bounding box reacting to a robot."
       "Video duration: ",
       " seconds. The video is 15 fps."
       "Here are the 5 analyses:",
       "Here are the contradictions extracted from the analyses:",
       "ROLE: Verifier. Your job is to synthesize a clear, human-interpretable behavior "
       "log of the blue-box/orange-box person's nonverbal behaviors and intent, using "
       "both the video and contradiction analyses."
       "Instructions:"
       "- Focus on the person in the blue/orange bounding box only."
       "- Do NOT hallucinate. Only include behaviors or intent that are directly "
       "visible."
       "- Do NOT make up new claims outside the existing analysis unless you have solid "
       "video evidence to support them."
       "- Fact-check every contradiction in the provided contradictions against what is "
       "visible in the video."
       "- For each candidate analysis, state whether it is 'supported', 'refuted', or "
       "'inconclusive', and cite specific visual evidence (body part movement, "
       "direction, duration, micro-cues, with timestamps)."
       "- If a candidate analysis is ambiguous or not clearly supported, mark it as "
       "'inconclusive' and explain."
       "- If any analysis mentions a brief or subtle cue (e.g., a quick glance, fleeting "
       "gesture, or micro-expression), carefully check the video for this event, even if "
       "only one analysis notices it. If visible, include it in the final log with "
       "supporting evidence and a timestamp."
       "- At the end, state the person's overall intention to interact with the robot, "
       "based ONLY on directly observable behaviors."
       "CHECKLIST FOR EACH CANDIDATE ANALYSIS:"
       "- Is this claim visible in the video? (Allow a plus or minus 1-second grace "
       "window.)"
       "- If not, mark it as 'inconclusive' or 'refuted' and explain."
       "- For 'supported' claims, cite the exact visual evidence."
       "- If conflicting claims are both supported by video evidence, mark the "
       "resolution as 'inconclusive'."
       "OUTPUT FORMAT:"
       "contradictions:"
       " - issue: <what is disputed>"
       "   candidates:"
       "   - analysis: <n>"
       "     quote: \"<verbatim>\""
       "     video_check: supported | refuted | inconclusive"
       "     indicators: [<brief visual indicators>]"
       " - resolution to the issue: <one line>. State inconclusive if conflicting claims "
       "are supported by the video."
       "Final log (Verification):"
       " - [mm:ss] <verified claims> "
       " - [mm:ss] <inconclusive claims, and explain what is the inconclusive part>"
       "Overall intention: [Interact | No Intent to Interact | Inconclusive] (rationale: "
       "<one line>)"},
      {"duration", "analyses", "contradictions"}};
  return t;
}

inline const PromptTemplate& majority_vote() {
  static const PromptTemplate t{
      {"You are given 5 independent analyses of a video showing a person reacting to a "
       "robot. ROLE: Majority Vote Synthesizer. Your job is to combine the 5 analyses "
       "using majority voting."
       "MAJORITY VOTE RULES:"
       "1. For each behavior/claim, count how many analyses support it (out of 5)."
       "2. Include behaviors supported by majority (4+/5)."
       "3. Exclude behaviors supported by minority (1/5) ."
       "4. For contradictory claims, the majority position wins."
       "5. If uncertain (e.g., 3 vs 2, 2 vs 3), mark claim as inconclusive and include "
       "the more supported position."
       "PROCESS:"
       "- Go through behaviors/claims mentioned across all 5 analyses."
       "- Count votes for each behavior."
       "- Include only majority-supported behaviors (4+/5)."
       "- For timing, use the most frequently mentioned time range."
       "- For overall intention, count votes for [Interact | No Intent to Interact | "
       "Inconclusive]. If uncertain (3 vs 2, 2 vs 2), mark claim as [Inconclusive]."
       "OUTPUT FORMAT:"
       "vote_summary:"
       "  - behavior: <description>"
       "    votes: <n>/5"
       "    time: <most common time mentioned>"
       "    decision: include(4+/5) | exclude(1/5) | inconclusive (2/5 or 3/5)"
       "contradictions:"
       "  - issue: <what is disputed>"
       "    position_A: \"<description>\" (votes: <n>/5)"
       "    position_B: \"<description>\" (votes: <n>/5)"
       "    winner: position_A | position_B | Inconclusive (if 3 vs 2 or 2 vs 2)"
       "Final log (Majority Vote):"
       "  - [mm:ss] <majority behavior> (votes: <n>/5)"
       "  - [mm:ss] <inconclusive claims, and vote summary (e.g. 3 vs 2)>"
       "Overall intention: Overall intention: [Interact | No Intent to Interact | "
       "Inconclusive] (votes: <n>/5)"
       "Here are the 5 analyses:",
       ""},
      {"analyses"}};
  return t;
}

inline const PromptTemplate& action() {
  static const PromptTemplate t{
      {"Given the following overall intention of a person's reaction to the robot, "
       "output the appropriate robot action towards the person as either 'Approach to "
       "interact', 'Leave, do not interact', or 'Inconclusive, Keep probing'."
       "Justify your answer in 1-2 sentences.",
       "Decision:"},
      {"log"}};
  return t;
}

inline const PromptTemplate& for_stage(PromptStage stage) {
  switch (stage) {
    case PromptStage::IndependentGaze: return independent_gaze();
    case PromptStage::IndependentProxemics: return independent_proxemics();
    case PromptStage::Contradiction: return contradiction();
    case PromptStage::Verify: return verify();
    case PromptStage::MajorityVote: return majority_vote();
    case PromptStage::Action: return action();
  }
  throw ConfigError("unknown prompt stage");
}

// "[Analysis 1/5]:<text>[Analysis 2/5]:<text>..." as spliced upstream.
inline std::string join_analyses(const std::vector<std::string>& analyses) {
  std::string out;
  for (size_t i = 0; i < analyses.size(); ++i) {
    out += "[Analysis " + std::to_string(i + 1) + "/" + std::to_string(analyses.size()) +
           "]:" + analyses[i];
  }
  return out;
}

inline std::string format_duration(double seconds) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", seconds);
  return buf;
}

}  // namespace prompts

struct PromptContext {
  std::vector<std::string> analyses;
  std::optional<std::string> contradiction_text;
  std::optional<std::string> synthesized_log;
};

inline std::string build_prompt(const TriggerEvent& event, PromptStage stage,
                                const PromptContext& context) {
  switch (stage) {
    case PromptStage::IndependentGaze:
      return prompts::independent_gaze().render({});
    case PromptStage::IndependentProxemics:
      return prompts::independent_proxemics().render({});
    case PromptStage::Contradiction:
      if (context.analyses.empty())
        throw MissingContextError("contradiction prompt requires the K analyses");
      return prompts::contradiction().render({prompts::join_analyses(context.analyses)});
    case PromptStage::Verify:
      if (context.analyses.empty())
        throw MissingContextError("verify prompt requires the K analyses");
      if (!context.contradiction_text)
        throw MissingContextError("verify prompt requires the contradiction text");
      return prompts::verify().render(
          {prompts::format_duration(event.clip_end - event.clip_start),
           prompts::join_analyses(context.analyses), *context.contradiction_text});
    case PromptStage::MajorityVote:
      if (context.analyses.empty())
        throw MissingContextError("majority-vote prompt requires the K analyses");
      return prompts::majority_vote().render({prompts::join_analyses(context.analyses)});
    case PromptStage::Action:
      if (!context.synthesized_log)
        throw MissingContextError("action prompt requires the synthesized log");
      return prompts::action().render({*context.synthesized_log});
  }
  throw ConfigError("unknown prompt stage");
}

inline std::string build_prompt(const TriggerEvent& event, PromptStage stage) {
  return build_prompt(event, stage, PromptContext{});
}

}  // namespace engage
