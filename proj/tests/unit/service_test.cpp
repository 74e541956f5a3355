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
#include <future>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "drivecue/error.hpp"
#include "drivecue/service.hpp"
#include "scripted_backend.hpp"
#include "test_support.hpp"

using namespace drivecue;
using nlohmann::json;

namespace {

const std::string kZeros = "0, 0, 0, 0, 0, 0, 0, 0, 0, 0";

service::ServiceConfig demo_config() {
  service::ServiceConfig c;
  c.manifest_path = testing::demo("manifest.json");
  c.annotations_path = testing::demo("annotations.csv");
  c.backend.mock_script = testing::demo("mock_script.json");
  c.pipeline.seed = 7;
  return c;
}

// Service listening on an ephemeral port for the lifetime of the object.
class Running {
 public:
  explicit Running(service::ServiceConfig config, std::unique_ptr<vlm::Backend> backend = nullptr)
      : service_(std::move(config), std::move(backend)) {
    port_ = service_.bind("127.0.0.1", 0);
    thread_ = std::thread([this] { service_.listen_after_bind(); });
    service_.wait_until_ready();
  }
  ~Running() {
    service_.stop();
    thread_.join();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30, 0);
    return c;
  }

 private:
  service::Service service_;
  int port_ = 0;
  std::thread thread_;
};

httplib::Result post_plan(const Running& s, const std::string& scene, const std::string& body) {
  return s.client().Post("/api/scenes/" + scene + "/plan", body, "application/json");
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("scene list is sorted and complete") {
  Running s(demo_config());
  auto res = s.client().Get("/api/scenes");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Content-Type").find("application/json") == 0);
  auto body = json::parse(res->body);
  REQUIRE(body.size() == 5);
  for (std::size_t i = 0; i < body.size(); ++i) {
    CHECK(body[i]["scene_id"] == "demo-00" + std::to_string(i + 1));
    CHECK(body[i]["frame_count"] == 3);
    CHECK(body[i]["has_ground_truth"] == true);
  }
}

TEST_CASE("scene detail carries frames, history, ground truth and annotations") {
  Running s(demo_config());
  auto res = s.client().Get("/api/scenes/demo-001");
  REQUIRE(res);
  CHECK(res->status == 200);
  auto body = json::parse(res->body);
  CHECK(body["horizon"] == 10);
  CHECK(body["dt_seconds"] == 0.5);
  CHECK(body["ground_truth"].size() == 10);
  CHECK(body["ego_history"].size() == 4);
  REQUIRE(body["annotations"].size() == 2);
  CHECK(body["annotations"][0]["annotation_id"] == "a01");
  CHECK(body["annotations"][0]["referentiality"] == "static_only");
  CHECK(body["annotations"][1]["referentiality"] == "dynamic_only");
  CHECK(body["annotations"][0]["length_bucket"] == "Descriptive");

  std::string url = body["frames"][0]["url"];
  auto img = s.client().Get(url);
  REQUIRE(img);
  CHECK(img->status == 200);
  CHECK(img->body == testing::read_file(testing::demo(body["frames"][0]["path"].get<std::string>())));
}

TEST_CASE("unknown scenes give 404") {
  Running s(demo_config());
  auto res = s.client().Get("/api/scenes/nope");
  REQUIRE(res);
  CHECK(res->status == 404);
  CHECK(json::parse(res->body)["code"] == "not_found");
  res = post_plan(s, "nope", R"({"instruction":"Stop"})");
  REQUIRE(res);
  CHECK(res->status == 404);
  res = s.client().Get("/api/elsewhere");
  REQUIRE(res);
  CHECK(res->status == 404);
}

TEST_CASE("bad plan requests") {
  Running s(demo_config());
  auto check = [&](const std::string& body, int status, const std::string& code) {
    auto res = post_plan(s, "demo-001", body);
    REQUIRE(res);
    CHECK(res->status == status);
    CHECK(json::parse(res->body)["code"] == code);
  };
  check(R"({"instruction":""})", 422, "invalid_instruction");
  check(R"({"instruction":"   \t "})", 422, "invalid_instruction");
  check("{not json", 400, "bad_request");
  check("[1,2]", 400, "bad_request");
  check(R"({"instruction":5})", 400, "bad_request");
  check(R"({"seed":"x"})", 400, "bad_request");
}

TEST_CASE("plan returns the trajectory and the prompts sent") {
  Running s(demo_config());
  auto res = post_plan(s, "demo-001", R"({"instruction":"Stop now","seed":7})");
  REQUIRE(res);
  REQUIRE(res->status == 200);
  auto body = json::parse(res->body);
  CHECK(body["condition"] == "instructed");
  CHECK(body["ade"] == 0.0);
  CHECK(body["word_count"] == 2);
  CHECK(body["length_bucket"] == "Ultra-Short");
  CHECK(body["global_waypoints"].size() == 10);
  CHECK(body["backend_id"] == "mock");
  REQUIRE(body["stages"].size() == 4);
  const std::string block = "\n\n" + testing::expected_injection("Stop now");
  for (const auto& st : body["stages"]) {
    std::string prompt = st["prompt"];
    REQUIRE(prompt.size() > block.size());
    CHECK(prompt.compare(prompt.size() - block.size(), block.size(), block) == 0);
  }

  auto base = post_plan(s, "demo-001", "");
  REQUIRE(base);
  REQUIRE(base->status == 200);
  auto b = json::parse(base->body);
  CHECK(b["condition"] == "baseline");
  CHECK(b["instruction"].is_null());
  CHECK(b["word_count"].is_null());
  CHECK(b["stages"][0]["prompt"].get<std::string>() + block ==
        body["stages"][0]["prompt"].get<std::string>());

  // Same seed, same answer.
  auto again = post_plan(s, "demo-001", R"({"instruction":"Stop now","seed":7})");
  REQUIRE(again);
  auto a = json::parse(again->body);
  CHECK(a["speeds"] == body["speeds"]);
  CHECK(a["curvatures"] == body["curvatures"]);
}

TEST_CASE("unparseable model output gives 502 with the exchanges") {
  auto backend = std::make_unique<testing::ScriptedBackend>(
      [](prompting::Stage, const vlm::ModelRequest&) { return std::string("I cannot say."); });
  Running s(demo_config(), std::move(backend));
  auto res = post_plan(s, "demo-002", R"({"instruction":"Go"})");
  REQUIRE(res);
  CHECK(res->status == 502);
  auto body = json::parse(res->body);
  CHECK(body["code"] == "parse_failure");
  // Four stages plus two reprompts.
  CHECK(body["stages"].size() == 6);
}

TEST_CASE("transport failures give 502 backend_failure") {
  auto c = demo_config();
  c.backend.kind = vlm::BackendKind::kHttp;
  c.backend.http.base_url = "http://127.0.0.1:1";
  c.backend.http.max_retries = 0;
  c.backend.http.timeout = std::chrono::seconds(2);
  Running s(c);
  auto res = post_plan(s, "demo-002", "{}");
  REQUIRE(res);
  CHECK(res->status == 502);
  CHECK(json::parse(res->body)["code"] == "backend_failure");
}

TEST_CASE("a second request while the only slot is taken") {
  std::promise<void> entered;
  std::promise<void> release;
  std::shared_future<void> go = release.get_future().share();
  std::atomic<bool> first{true};
  auto reply = [&](prompting::Stage stage, const vlm::ModelRequest&) {
    if (first.exchange(false)) {
      entered.set_value();
      go.wait();
    }
    return stage == prompting::Stage::kTrajectoryRequest
               ? "Speeds: [" + kZeros + "]\nCurvatures: [" + kZeros + "]"
               : std::string("Noted.");
  };

  SUBCASE("answers 409 without a queue") {
    Running s(demo_config(), std::make_unique<testing::ScriptedBackend>(reply));
    auto slow = std::async(std::launch::async, [&] { return post_plan(s, "demo-001", "{}"); });
    entered.get_future().wait();
    auto res = post_plan(s, "demo-001", "{}");
    REQUIRE(res);
    CHECK(res->status == 409);
    CHECK(json::parse(res->body)["code"] == "busy");
    release.set_value();
    auto done = slow.get();
    REQUIRE(done);
    CHECK(done->status == 200);
  }
  SUBCASE("waits with a queue") {
    auto c = demo_config();
    c.queue = true;
    Running s(c, std::make_unique<testing::ScriptedBackend>(reply));
    auto slow = std::async(std::launch::async, [&] { return post_plan(s, "demo-001", "{}"); });
    entered.get_future().wait();
    auto queued = std::async(std::launch::async, [&] { return post_plan(s, "demo-001", "{}"); });
    CHECK(queued.wait_for(std::chrono::milliseconds(200)) == std::future_status::timeout);
    release.set_value();
    auto a = slow.get();
    auto b = queued.get();
    REQUIRE(a);
    REQUIRE(b);
    CHECK(a->status == 200);
    CHECK(b->status == 200);
  }
}

TEST_CASE("CORS headers") {
  auto c = demo_config();
  c.cors_origin = "http://localhost:5173";
  Running s(c);
  auto res = s.client().Get("/api/scenes");
  REQUIRE(res);
  CHECK(res->get_header_value("Access-Control-Allow-Origin") == "http://localhost:5173");
  auto pre = s.client().Options("/api/scenes/demo-001/plan");
  REQUIRE(pre);
  CHECK(pre->status == 204);
  CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);
}

TEST_CASE("a malformed manifest is refused at construction") {
  testing::TempDir dir;
  testing::write_file(dir / "manifest.json", R"({"scenes": [{"scene_id": 3}]})");
  service::ServiceConfig c;
  c.manifest_path = dir / "manifest.json";
  auto construct = [&] { service::Service svc(c); };
  CHECK_THROWS_AS(construct(), Error);
  c.manifest_path = dir / "missing.json";
  CHECK_THROWS_AS(construct(), Error);
}

}  // TEST_SUITE
