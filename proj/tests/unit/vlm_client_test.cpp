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

#include <doctest.h>

#include <chrono>
#include <cstdlib>

#include <json.hpp>

#include "drivecue/parser.hpp"
#include "drivecue/prompting.hpp"
#include "drivecue/vlm_client.hpp"
#include "fake_chat_server.hpp"
#include "test_support.hpp"

using namespace drivecue;
using namespace drivecue::vlm;
using nlohmann::json;
using std::chrono::milliseconds;

namespace {

ModelRequest sample_request() {
  ModelRequest r;
  r.system_text = "system";
  r.user_text = "What is going on in the scene?";
  r.images.push_back({"f.jpg", "image/jpeg", "AAEC"});
  r.seed = 9;
  return r;
}

struct SleepLog {
  std::vector<milliseconds> waits;
  HttpBackend::Sleeper sleeper() {
    return [this](milliseconds d) { waits.push_back(d); };
  }
};

HttpConfig config_for(const testing::FakeChatServer& s) {
  HttpConfig c;
  c.base_url = s.base_url();
  c.api_key = "secret";
  c.timeout = milliseconds(5000);
  return c;
}

}  // namespace

TEST_SUITE("vlm_client") {

TEST_CASE("chat body carries system text, prompt, images and seed") {
  json body = json::parse(build_chat_body(sample_request(), "m1"));
  CHECK(body["model"] == "m1");
  CHECK(body["seed"] == 9);
  CHECK(body["max_tokens"] == 512);
  REQUIRE(body["messages"].size() == 2);
  CHECK(body["messages"][0]["role"] == "system");
  const auto& parts = body["messages"][1]["content"];
  CHECK(parts[0]["text"] == "What is going on in the scene?");
  CHECK(parts[1]["image_url"]["url"] == "data:image/jpeg;base64,AAEC");
}

TEST_CASE("response content is extracted or rejected") {
  CHECK(parse_chat_response(testing::FakeChatServer::chat_body("hi")) == "hi");
  CHECK(parse_chat_response(R"({"choices":[{"message":{"content":[{"type":"text","text":"a"},{"type":"text","text":"b"}]}}]})") ==
        "ab");
  for (const char* bad : {"not json", "{}", R"({"choices":[]})", R"({"choices":[{"message":{"content":5}}]})"}) {
    try {
      parse_chat_response(bad);
      FAIL("accepted ", bad);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kResponseSchema);
    }
  }
}

TEST_CASE("successful call sends the bearer token") {
  testing::FakeChatServer server;
  server.push(200, testing::FakeChatServer::chat_body("Speeds: [1]"));
  HttpBackend backend(config_for(server));
  auto r = backend.complete(sample_request());
  CHECK(r.text == "Speeds: [1]");
  CHECK(backend.attempts_of_last_call() == 1);
  CHECK(server.auths().at(0) == "Bearer secret");
  CHECK(json::parse(server.bodies().at(0))["model"] == "llava-v1.6-mistral-7b");
}

TEST_CASE("server errors are retried with doubling backoff") {
  testing::FakeChatServer server;
  server.push(503, "busy");
  server.push(500, "oops");
  server.push(200, testing::FakeChatServer::chat_body("done"));
  SleepLog log;
  HttpBackend backend(config_for(server), log.sleeper());
  CHECK(backend.complete(sample_request()).text == "done");
  CHECK(backend.attempts_of_last_call() == 3);
  CHECK(log.waits == std::vector<milliseconds>{milliseconds(1000), milliseconds(2000)});
}

TEST_CASE("retries are bounded") {
  testing::FakeChatServer server;
  server.set_fallback([](const std::string&) { return testing::FakeChatServer::Reply{502, "bad gateway"}; });
  SleepLog log;
  HttpBackend backend(config_for(server), log.sleeper());
  try {
    backend.complete(sample_request());
    FAIL("expected failure");
  } catch (const BackendError& e) {
    CHECK(e.code() == ErrorCode::kTransport);
    CHECK(e.status() == 502);
  }
  CHECK(backend.attempts_of_last_call() == 4);
  CHECK(log.waits.size() == 3);
  CHECK(server.bodies().size() == 4);
}

TEST_CASE("401 fails fast as an auth error") {
  testing::FakeChatServer server;
  server.push(401, "no");
  SleepLog log;
  HttpBackend backend(config_for(server), log.sleeper());
  try {
    backend.complete(sample_request());
    FAIL("expected failure");
  } catch (const BackendError& e) {
    CHECK(e.code() == ErrorCode::kAuth);
    CHECK(e.status() == 401);
  }
  CHECK(backend.attempts_of_last_call() == 1);
  CHECK(log.waits.empty());
}

TEST_CASE("other 4xx is not retried") {
  testing::FakeChatServer server;
  server.push(400, "bad request");
  SleepLog log;
  HttpBackend backend(config_for(server), log.sleeper());
  try {
    backend.complete(sample_request());
    FAIL("expected failure");
  } catch (const BackendError& e) {
    CHECK(e.code() == ErrorCode::kHttpStatus);
  }
  CHECK(backend.attempts_of_last_call() == 1);
}

TEST_CASE("unreachable server is a transport error") {
  HttpConfig c;
  c.base_url = "http://127.0.0.1:1";
  c.max_retries = 1;
  c.timeout = milliseconds(500);
  SleepLog log;
  HttpBackend backend(c, log.sleeper());
  try {
    backend.complete(sample_request());
    FAIL("expected failure");
  } catch (const BackendError& e) {
    CHECK(e.code() == ErrorCode::kTransport);
    CHECK(e.status() == 0);
  }
  CHECK(backend.attempts_of_last_call() == 2);
}

TEST_CASE("base URL with a /v1 prefix is not doubled") {
  testing::FakeChatServer server("/api/v1/chat/completions");
  HttpConfig c = config_for(server);
  c.base_url = server.base_url() + "/api/v1/";
  HttpBackend backend(c);
  CHECK(backend.complete(sample_request()).text == "ok");
  c.base_url = "localhost:8000";
  CHECK_THROWS_AS(HttpBackend{c}, Error);
}

TEST_CASE("mock is a pure function of the request") {
  auto a = sample_request();
  auto b = a;
  CHECK(mock_complete(a, {}).text == mock_complete(b, {}).text);
  prompting::PromptStage traj = prompting::build_trajectory_prompt(
      prompting::Condition::baseline(), {"s", "o", "i"}, "ego");
  a.user_text = traj.text;
  std::string first = mock_complete(a, {}).text;
  auto parsed = parser::parse_trajectory_text(first);
  for (double v : parsed.sequence.speeds) CHECK((v >= 0.0 && v <= 15.0));
  for (double k : parsed.sequence.curvatures) CHECK((k >= -0.2 && k <= 0.2));
  int differing = 0;
  for (int seed = 0; seed < 20; ++seed) {
    a.seed = seed;
    differing += mock_complete(a, {}).text != first;
  }
  CHECK(differing >= 15);
  CHECK(MockBackend().complete(a).backend_id == "mock");
}

TEST_CASE("mock script rules match stage and instruction") {
  auto script = parse_mock_script(R"([
    {"match": {"stage": "trajectory", "instruction_contains": "Stop"}, "response_text": "STOP"},
    {"match": {"stage": "intent"}, "response_text": "INTENT"},
    {"response_text": "ANY"}
  ])");
  using prompting::Condition;
  auto req = [](std::string text) {
    ModelRequest r;
    r.user_text = std::move(text);
    return r;
  };
  auto traj = prompting::build_trajectory_prompt(Condition::instructed("Stop here"), {"s", "o", "i"}, "e").text;
  auto traj_other = prompting::build_trajectory_prompt(Condition::instructed("stop here"), {"s", "o", "i"}, "e").text;
  auto intent = prompting::build_intent_prompt(Condition::baseline()).text;
  CHECK(mock_complete(req(traj), script).text == "STOP");
  CHECK(mock_complete(req(traj_other), script).text == "ANY");  // case-sensitive
  CHECK(mock_complete(req(intent), script).text == "INTENT");
}

TEST_CASE("malformed mock scripts are rejected") {
  for (const char* bad : {"{}", "[1]", R"([{"match":{}}])", R"([{"match":{"stage":"nope"},"response_text":""}])",
                          R"([{"match":{"colour":"red"},"response_text":""}])", "[{"}) {
    CHECK_THROWS_AS(parse_mock_script(bad), Error);
  }
  CHECK(load_mock_script(testing::demo("mock_script.json")).rules.size() == 3);
}

TEST_CASE("environment overrides") {
  ::setenv("DRIVECUE_BASE_URL", "http://example.test:9", 1);
  ::setenv("DRIVECUE_MODEL", "m2", 1);
  ::unsetenv("DRIVECUE_API_KEY");
  ::setenv("OPENAI_API_KEY", "k-openai", 1);
  BackendConfig c;
  apply_environment(c);
  CHECK(c.http.base_url == "http://example.test:9");
  CHECK(c.http.model == "m2");
  CHECK(c.http.api_key == "k-openai");
  ::setenv("DRIVECUE_API_KEY", "k-own", 1);
  apply_environment(c);
  CHECK(c.http.api_key == "k-own");
  for (const char* v : {"DRIVECUE_BASE_URL", "DRIVECUE_MODEL", "DRIVECUE_API_KEY", "OPENAI_API_KEY"}) ::unsetenv(v);
}

TEST_CASE("image loading") {
  auto img = load_image(testing::demo("frames/demo-001_0.jpg"));
  CHECK(img.media_type == "image/jpeg");
  CHECK(img.data_url().starts_with("data:image/jpeg;base64,/9j/"));
  CHECK_THROWS_AS(load_image("/nonexistent.png"), Error);
}

}  // TEST_SUITE
