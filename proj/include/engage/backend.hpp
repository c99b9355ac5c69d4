#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "engage/errors.hpp"
#include "engage/prompts.hpp"
#include "engage/types.hpp"

namespace engage {

struct ClipRef {
  std::string episode_id;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string overlay_ref;  // sidecar annotation file
  std::string media_ref;    // upstream video reference, opaque
};

struct BackendRequest {
  std::string model_id;
  ClipRef clip;
  std::string prompt;
  double temperature = 0.0;
  // Keying metadata; the mock backend scripts on these.
  TriggerKind event_kind = TriggerKind::GazeShift;
  PromptStage stage = PromptStage::IndependentGaze;
  int sample_index = 0;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const BackendRequest& req) = 0;
  virtual long request_count() const { return requests_; }
  virtual void reset_counter() { requests_ = 0; }

 protected:
  long requests_ = 0;
};

// Scripted backend reading one response file per (scenario, event kind,
// stage, sample). File naming:
//   <scenario>__<gaze|prox>__<stage>__<sample>.txt
// with `any` accepted as a wildcard scenario.
class MockBackend : public Backend {
 public:
  explicit MockBackend(std::string script_dir) : dir_(std::move(script_dir)) {}

  static std::string key(const std::string& scenario, TriggerKind kind, PromptStage stage,
                         int sample) {
    std::string k = kind == TriggerKind::GazeShift ? "gaze" : "prox";
    return scenario + "__" + k + "__" + to_string(stage) + "__" + std::to_string(sample) +
           ".txt";
  }

  std::string complete(const BackendRequest& req) override {
    ++requests_;
    ++by_stage_[to_string(req.stage)];
    for (const std::string& scenario : {req.clip.episode_id, std::string("any")}) {
      std::filesystem::path p =
          std::filesystem::path(dir_) / key(scenario, req.event_kind, req.stage,
                                            req.sample_index);
      std::ifstream in(p);
      if (in) {
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
      }
    }
    throw BackendError("mock backend: no script for " +
                       key(req.clip.episode_id, req.event_kind, req.stage,
                           req.sample_index));
  }

  const std::map<std::string, long>& requests_by_stage() const { return by_stage_; }

 private:
  std::string dir_;
  std::map<std::string, long> by_stage_;
};

// Real adapter: single HTTP+JSON shape.
//   POST <path>  body: {model, media:{episode,start,end,overlay,ref}, prompt, temperature}
//   response: {text}
// Auth token comes from the ENGAGE_BACKEND_TOKEN environment variable.
class HttpBackend : public Backend {
 public:
  HttpBackend(std::string host, int port, std::string path = "/v1/complete")
      : host_(std::move(host)), port_(port), path_(std::move(path)) {
    if (const char* tok = std::getenv("ENGAGE_BACKEND_TOKEN")) token_ = tok;
  }

  std::string complete(const BackendRequest& req) override;

 private:
  std::string host_;
  int port_;
  std::string path_;
  std::string token_;
};

inline nlohmann::json backend_request_json(const BackendRequest& req) {
  return {{"model", req.model_id},
          {"media",
           {{"episode", req.clip.episode_id},
            {"start", req.clip.start_s},
            {"end", req.clip.end_s},
            {"overlay", req.clip.overlay_ref},
            {"ref", req.clip.media_ref}}},
          {"prompt", req.prompt},
          {"temperature", req.temperature}};
}

}  // namespace engage

#ifndef ENGAGE_NO_HTTPLIB
#include <httplib.h>

namespace engage {

inline std::string HttpBackend::complete(const BackendRequest& req) {
  ++requests_;
  httplib::Client client(host_, port_);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
  auto res = client.Post(path_, headers, backend_request_json(req).dump(),
                         "application/json");
  if (!res) throw BackendError("backend unreachable: " + host_);
  if (res->status != 200)
    throw BackendError("backend returned status " + std::to_string(res->status));
  try {
    auto j = nlohmann::json::parse(res->body);
    return j.at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("malformed backend response: ") + e.what());
  }
}

}  // namespace engage
#endif
