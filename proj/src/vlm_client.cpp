// Copyright 2026 The drivecue Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "drivecue/vlm_client.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "drivecue/parser.hpp"
#include "drivecue/prompting.hpp"
#include "text_util.hpp"

namespace drivecue::vlm {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string media_type_for(const std::filesystem::path& path) {
  std::string ext = text::to_lower(path.extension().string());
  if (ext == ".png") return "image/png";
  if (ext == ".webp") return "image/webp";
  if (ext == ".gif") return "image/gif";
  return "image/jpeg";
}

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // request path for chat completions
};

SplitUrl split_base_url(std::string_view base_url) {
  std::string url(text::trim(base_url));
  while (url.ends_with('/')) url.pop_back();
  std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "base URL needs a scheme: '" + url + "'");
  }
  std::size_t slash = url.find('/', scheme + 3);
  SplitUrl out;
  out.origin = url.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : url.substr(slash);
  out.path = prefix.ends_with("/v1") ? prefix + "/chat/completions"
                                     : prefix + "/v1/chat/completions";
  return out;
}

// splitmix64
struct Stream {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }
};

std::uint64_t request_hash(const ModelRequest& request) {
  std::uint64_t h = text::fnv1a64(request.system_text.value_or(""));
  h = text::fnv1a64(std::string_view("\x1f", 1), h);
  h = text::fnv1a64(request.user_text, h);
  for (const auto& img : request.images) {
    h = text::fnv1a64(std::string_view("\x1e", 1), h);
    h = text::fnv1a64(img.source, h);
    h = text::fnv1a64(img.base64, h);
  }
  std::string seed = request.seed ? std::to_string(*request.seed) : "none";
  h = text::fnv1a64(std::string_view("\x1d", 1), h);
  return text::fnv1a64(seed, h);
}

constexpr std::array<std::string_view, 3> kSceneAnswers = {
    "The ego car is on a two-lane urban road in daylight. The traffic light ahead is green, "
    "a few vehicles travel in the same direction, and the lane markings are clearly visible.",
    "The ego car is approaching an intersection. The traffic light is red, pedestrians are "
    "waiting at the crosswalk, and dashed lane markings separate the lanes.",
    "The ego car is driving on a wide road with parked cars on the right. There is no traffic "
    "light in view, one pedestrian is on the sidewalk, and the lane markings are faded.",
};

constexpr std::array<std::string_view, 3> kObjectAnswers = {
    "1. A white sedan directly ahead in the ego lane, about 15 m away; it sets the following "
    "distance. 2. A pedestrian on the right sidewalk; they might step onto the road.",
    "1. A truck in the left lane slightly ahead; it may merge into the ego lane. 2. A cyclist "
    "near the right curb; the ego car must keep a safe lateral gap. 3. A traffic light at the "
    "intersection; it controls when the ego car can proceed.",
    "1. A parked van on the right side; its door could open. 2. An oncoming car in the "
    "opposite lane; it limits lateral space.",
};

constexpr std::array<std::string_view, 3> kIntentAnswers = {
    "The car will go straight at a steady speed of about 8 m/s.",
    "The car will turn left at a low speed of about 4 m/s after yielding to oncoming traffic.",
    "The car will slow down and go straight, keeping about 5 m/s.",
};

std::string default_answer(prompting::Stage stage, std::uint64_t hash) {
  Stream rng{hash};
  switch (stage) {
    case prompting::Stage::kSceneDescription:
      return std::string(kSceneAnswers[rng.next() % kSceneAnswers.size()]);
    case prompting::Stage::kObjectIdentification:
      return std::string(kObjectAnswers[rng.next() % kObjectAnswers.size()]);
    case prompting::Stage::kIntentEstimation:
      return std::string(kIntentAnswers[rng.next() % kIntentAnswers.size()]);
    case prompting::Stage::kTrajectoryRequest:
      break;
  }
  return {};
}

std::string default_trajectory(std::size_t horizon, std::uint64_t hash) {
  Stream rng{hash};
  // Integer ticks keep the printed decimals exact.
  std::int64_t speed0 = rng.range(0, 1500);      // cm/s
  std::int64_t slope = rng.range(-100, 100);     // cm/s per step
  std::int64_t kappa0 = rng.range(-200, 200);    // 1e-3 1/m
  parser::SpeedCurvatureSequence seq;
  for (std::size_t t = 0; t < horizon; ++t) {
    std::int64_t v = std::clamp<std::int64_t>(speed0 + slope * static_cast<std::int64_t>(t), 0, 1500);
    std::int64_t k = std::clamp<std::int64_t>(kappa0 + rng.range(-10, 10), -200, 200);
    seq.speeds.push_back(static_cast<double>(v) / 100.0);
    seq.curvatures.push_back(static_cast<double>(k) / 1000.0);
  }
  return parser::format_sequence(seq);
}

std::optional<prompting::Stage> detect_stage(std::string_view prompt) {
  using prompting::Stage;
  for (Stage s : {Stage::kTrajectoryRequest, Stage::kIntentEstimation,
                  Stage::kObjectIdentification, Stage::kSceneDescription}) {
    if (prompt.find(prompting::stage_marker(s)) != std::string_view::npos) return s;
  }
  return std::nullopt;
}

std::size_t detect_horizon(std::string_view prompt) {
  // "Predict the ego car's next 10 steps"
  std::string_view marker = prompting::stage_marker(prompting::Stage::kTrajectoryRequest);
  std::size_t at = prompt.find(marker);
  if (at == std::string_view::npos) return 10;
  std::size_t p = at + marker.size();
  while (p < prompt.size() && prompt[p] == ' ') ++p;
  std::size_t n = 0;
  bool any = false;
  while (p < prompt.size() && prompt[p] >= '0' && prompt[p] <= '9' && n < 100000) {
    n = n * 10 + static_cast<std::size_t>(prompt[p] - '0');
    ++p;
    any = true;
  }
  return any && n > 0 ? n : 10;
}

}  // namespace

ImagePayload load_image(const std::filesystem::path& path) {
  return ImagePayload{path.string(), media_type_for(path), text::base64_encode(read_file(path))};
}

// ---------------------------------------------------------------------------

std::string build_chat_body(const ModelRequest& request, std::string_view model) {
  json messages = json::array();
  if (request.system_text) {
    messages.push_back({{"role", "system"}, {"content", *request.system_text}});
  }
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", request.user_text}});
  for (const auto& img : request.images) {
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", img.data_url()}}}});
  }
  messages.push_back({{"role", "user"}, {"content", std::move(content)}});

  json body = {{"model", model},
               {"messages", std::move(messages)},
               {"temperature", request.temperature},
               {"max_tokens", request.max_tokens}};
  if (request.seed) body["seed"] = *request.seed;
  return body.dump();
}

std::string parse_chat_response(std::string_view body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kResponseSchema, std::string("response is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("choices") || !doc["choices"].is_array() ||
      doc["choices"].empty()) {
    throw Error(ErrorCode::kResponseSchema, "response lacks choices[0]");
  }
  const json& choice = doc["choices"][0];
  if (!choice.is_object() || !choice.contains("message") || !choice["message"].is_object()) {
    throw Error(ErrorCode::kResponseSchema, "response lacks choices[0].message");
  }
  const json& content = choice["message"].value("content", json());
  if (content.is_null()) return {};
  if (content.is_string()) return content.get<std::string>();
  if (content.is_array()) {
    // Some servers return content parts even for plain text.
    std::string out;
    for (const auto& part : content) {
      if (part.is_object() && part.value("type", "") == "text" && part.contains("text") &&
          part["text"].is_string()) {
        out += part["text"].get<std::string>();
      }
    }
    return out;
  }
  throw Error(ErrorCode::kResponseSchema, "choices[0].message.content has unexpected type");
}

HttpBackend::HttpBackend(HttpConfig config, Sleeper sleeper)
    : config_(std::move(config)), sleeper_(std::move(sleeper)) {
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (config_.max_retries < 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_retries must be >= 0");
  }
  split_base_url(config_.base_url);  // validates
}

std::string HttpBackend::id() const { return "http:" + config_.model + "@" + config_.base_url; }

ModelResponse HttpBackend::complete(const ModelRequest& request) {
  const SplitUrl url = split_base_url(config_.base_url);
  const std::string body = build_chat_body(request, config_.model);

  httplib::Client client(url.origin);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }

  const auto start = std::chrono::steady_clock::now();
  std::string last_error;
  int last_status = 0;
  last_attempts_ = 0;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) sleeper_(config_.backoff * (1 << (attempt - 1)));
    ++last_attempts_;
    auto res = client.Post(url.path, headers, body, "application/json");
    if (!res) {
      last_status = 0;
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    last_status = res->status;
    if (res->status >= 200 && res->status < 300) {
      ModelResponse out;
      out.text = parse_chat_response(res->body);
      out.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      out.backend_id = id();
      return out;
    }
    if (res->status == 401 || res->status == 403) {
      throw BackendError(ErrorCode::kAuth, res->status,
                         "authentication failed (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status >= 400 && res->status < 500) {
      throw BackendError(ErrorCode::kHttpStatus, res->status,
                         "request rejected (HTTP " + std::to_string(res->status) +
                             "): " + res->body.substr(0, 200));
    }
    last_error = "HTTP " + std::to_string(res->status);
  }
  throw BackendError(ErrorCode::kTransport, last_status,
                     last_error + " after " + std::to_string(config_.max_retries) + " retries");
}

// ---------------------------------------------------------------------------

MockScript parse_mock_script(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kSchema, std::string("mock script: invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::kSchema, "mock script: expected a JSON array");
  MockScript script;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& r = doc[i];
    std::string where = "mock script: rule " + std::to_string(i) + ": ";
    if (!r.is_object()) throw Error(ErrorCode::kSchema, where + "expected an object");
    if (!r.contains("response_text") || !r["response_text"].is_string()) {
      throw Error(ErrorCode::kSchema, where + "missing string 'response_text'");
    }
    MockRule rule;
    rule.response_text = r["response_text"].get<std::string>();
    if (r.contains("match")) {
      const auto& m = r["match"];
      if (!m.is_object()) throw Error(ErrorCode::kSchema, where + "'match' must be an object");
      for (const auto& [key, value] : m.items()) {
        if (key != "stage" && key != "instruction_contains") {
          throw Error(ErrorCode::kSchema, where + "unknown match key '" + key + "'");
        }
        if (!value.is_string()) {
          throw Error(ErrorCode::kSchema, where + "match." + key + " must be a string");
        }
      }
      if (m.contains("stage")) {
        std::string stage = m["stage"].get<std::string>();
        if (!prompting::stage_from_name(stage)) {
          throw Error(ErrorCode::kSchema, where + "unknown stage '" + stage + "'");
        }
        rule.stage = stage;
      }
      if (m.contains("instruction_contains")) {
        rule.instruction_contains = m["instruction_contains"].get<std::string>();
      }
    }
    script.rules.push_back(std::move(rule));
  }
  return script;
}

MockScript load_mock_script(const std::filesystem::path& path) {
  return parse_mock_script(read_file(path));
}

ModelResponse mock_complete(const ModelRequest& request, const MockScript& script) {
  const auto stage = detect_stage(request.user_text);
  const auto instruction = prompting::extract_instruction(request.user_text);
  ModelResponse out;
  out.backend_id = "mock";
  for (const auto& rule : script.rules) {
    if (rule.stage && (!stage || prompting::stage_name(*stage) != *rule.stage)) continue;
    if (rule.instruction_contains &&
        (!instruction || instruction->find(*rule.instruction_contains) == std::string::npos)) {
      continue;
    }
    out.text = rule.response_text;
    return out;
  }
  const std::uint64_t hash = request_hash(request);
  if (!stage) {
    out.text = "Understood.";
  } else if (*stage == prompting::Stage::kTrajectoryRequest) {
    out.text = default_trajectory(detect_horizon(request.user_text), hash);
  } else {
    out.text = default_answer(*stage, hash);
  }
  return out;
}

ModelResponse MockBackend::complete(const ModelRequest& request) {
  return mock_complete(request, script_);
}

// ---------------------------------------------------------------------------

void apply_environment(BackendConfig& config) {
  if (const char* v = std::getenv("DRIVECUE_BASE_URL"); v && *v) config.http.base_url = v;
  if (const char* v = std::getenv("DRIVECUE_API_KEY"); v && *v) {
    config.http.api_key = v;
  } else if (const char* o = std::getenv("OPENAI_API_KEY"); o && *o && config.http.api_key.empty()) {
    config.http.api_key = o;
  }
  if (const char* v = std::getenv("DRIVECUE_MODEL"); v && *v) config.http.model = v;
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
  if (config.kind == BackendKind::kHttp) return std::make_unique<HttpBackend>(config.http);
  MockScript script;
  if (config.mock_script) script = load_mock_script(*config.mock_script);
  return std::make_unique<MockBackend>(std::move(script));
}

}  // namespace drivecue::vlm
