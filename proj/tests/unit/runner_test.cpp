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

#include <fstream>
#include <set>

#include "drivecue/error.hpp"
#include "drivecue/results_log.hpp"
#include "drivecue/runner.hpp"
#include "scripted_backend.hpp"
#include "test_support.hpp"

using namespace drivecue;
using namespace drivecue::runner;
using prompting::Condition;
using prompting::Stage;

namespace {

const std::string kZeros = "0, 0, 0, 0, 0, 0, 0, 0, 0, 0";
const std::string kStop = "Speeds: [" + kZeros + "]\nCurvatures: [" + kZeros + "]";
const std::string kTwoMps = "Speeds: [2, 2, 2, 2, 2, 2, 2, 2, 2, 2]\nCurvatures: [" + kZeros + "]";

dataset::SceneRecord straight_scene(double lateral_offset, std::size_t frames = 3) {
  dataset::SceneRecord s;
  s.scene_id = "straight";
  for (std::size_t i = 0; i < frames; ++i) s.frames.push_back({"f" + std::to_string(i) + ".jpg", 0.5 * i});
  s.ego_history = {{0.0, {-1.0, 0.0}, 0.0, 2.0}, {0.5, {0.0, 0.0}, 0.0, 2.0}};
  for (int i = 1; i <= 10; ++i) s.ground_truth.push_back({static_cast<double>(i), lateral_offset});
  s.bounds = dataset::compute_bounds(s);
  return s;
}

dataset::SceneRecord stationary_scene() {
  dataset::SceneRecord s;
  s.scene_id = "parked";
  s.frames = {{"a.jpg", 0.0}};
  s.ego_history = {{0.0, {12.0, -4.0}, 1.0, 0.0}};
  s.ground_truth.assign(10, {12.0, -4.0});
  s.bounds = dataset::compute_bounds(s);
  return s;
}

RunConfig demo_config(const std::filesystem::path& out) {
  RunConfig c;
  c.manifest_path = testing::demo("manifest.json");
  c.annotations_path = testing::demo("annotations.csv");
  c.backend.mock_script = testing::demo("mock_script.json");
  c.pipeline.seed = 7;
  c.output_path = out;
  return c;
}

std::vector<std::string> stripped_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> out;
  while (std::getline(in, line)) {
    if (line.find("\"type\":\"record\"") != std::string::npos) out.push_back(results::strip_metadata(line));
  }
  return out;
}

}  // namespace

TEST_SUITE("runner") {

TEST_CASE("stopping on a stationary scene scores zero") {
  auto backend = testing::ScriptedBackend::fixed(kStop);
  auto plan = plan_scene(stationary_scene(), Condition::instructed("Stop"), {}, backend);
  REQUIRE(plan.ok());
  CHECK(*plan.ade == 0.0);
  CHECK_FALSE(plan.out_of_bounds);
  CHECK(plan.exchanges.size() == 4);
}

TEST_CASE("a constant lateral offset of 2 m gives ADE 2") {
  auto backend = testing::ScriptedBackend::fixed(kTwoMps);
  auto plan = plan_scene(straight_scene(2.0), Condition::baseline(), {}, backend);
  REQUIRE(plan.ok());
  CHECK(*plan.ade == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(plan.global_points.front().x == doctest::Approx(1.0));
  CHECK(plan.ego_points.back().x == doctest::Approx(10.0));
  auto exact = plan_scene(straight_scene(0.0), Condition::baseline(), {}, backend);
  CHECK(*exact.ade == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("stages run in order and the instruction reaches every stage") {
  auto backend = testing::ScriptedBackend::fixed(kTwoMps);
  auto plan = plan_scene(straight_scene(0.0), Condition::instructed("Keep going"), {}, backend);
  REQUIRE(plan.exchanges.size() == 4);
  const Stage order[] = {Stage::kSceneDescription, Stage::kObjectIdentification, Stage::kIntentEstimation,
                         Stage::kTrajectoryRequest};
  for (int i = 0; i < 4; ++i) {
    CHECK(plan.exchanges[i].stage == order[i]);
    CHECK(prompting::extract_instruction(plan.exchanges[i].prompt) == "Keep going");
  }
  auto req = backend.requests();
  CHECK(req[0].system_text == std::string(prompting::system_prompt()));
  CHECK(req[3].user_text.find("Noted.") != std::string::npos);  // earlier answers are fed forward
}

TEST_CASE("only the most recent frames are attached") {
  auto backend = testing::ScriptedBackend::fixed(kTwoMps);
  PipelineOptions o;
  o.frames_per_call = 6;
  plan_scene(straight_scene(0.0, 8), Condition::baseline(), o, backend);
  auto req = backend.requests();
  REQUIRE(req[0].images.size() == 6);
  CHECK(req[0].images.front().source == "f2.jpg");
  CHECK(req[0].images.back().source == "f7.jpg");
}

TEST_CASE("unreadable trajectories are re-requested up to the limit") {
  int calls = 0;
  testing::ScriptedBackend flaky([&](Stage s, const auto&) -> std::string {
    if (s != Stage::kTrajectoryRequest) return "ok";
    return ++calls < 3 ? "I am not sure." : kTwoMps;
  });
  auto plan = plan_scene(straight_scene(0.0), Condition::baseline(), {}, flaky);
  REQUIRE(plan.ok());
  CHECK(plan.reprompts == 2);
  CHECK(plan.exchanges.back().prompt.ends_with(prompting::reprompt_suffix(10)));

  testing::ScriptedBackend hopeless([](Stage s, const auto&) -> std::string {
    return s == Stage::kTrajectoryRequest ? "no idea" : "ok";
  });
  auto failed = plan_scene(straight_scene(0.0), Condition::baseline(), {}, hopeless);
  CHECK(failed.failure == FailureKind::kParse);
  CHECK_FALSE(failed.ade);
  CHECK(failed.exchanges.size() == 6);
  CHECK(failed.failure_message.starts_with("NoTrajectoryFound"));
}

TEST_CASE("empty stage answers are parse failures") {
  testing::ScriptedBackend mute([](Stage, const auto&) { return std::string("  "); });
  auto plan = plan_scene(straight_scene(0.0), Condition::baseline(), {}, mute);
  CHECK(plan.failure == FailureKind::kParse);
  CHECK(plan.exchanges.size() == 1);
}

TEST_CASE("backend failures are recorded, not thrown") {
  vlm::HttpConfig c;
  c.base_url = "http://127.0.0.1:1";
  c.max_retries = 0;
  c.timeout = std::chrono::milliseconds(500);
  vlm::HttpBackend http(c, [](std::chrono::milliseconds) {});
  PipelineOptions o;
  o.frames_dir = testing::demo("");
  auto scene = straight_scene(0.0);
  scene.frames = {{"frames/demo-002_0.jpg", 0.0}};
  auto plan = plan_scene(scene, Condition::baseline(), o, http);
  CHECK(plan.failure == FailureKind::kTransport);
  CHECK_FALSE(plan.ade);

  auto missing = straight_scene(0.0);
  auto io = plan_scene(missing, Condition::baseline(), o, http);
  CHECK(io.failure == FailureKind::kIo);
}

TEST_CASE("blank instructions are rejected before any request") {
  auto backend = testing::ScriptedBackend::fixed(kStop);
  CHECK_THROWS_AS(plan_scene(stationary_scene(), Condition::instructed(" "), {}, backend), Error);
  CHECK(backend.requests().empty());
}

TEST_CASE("run_scene fills the record") {
  auto backend = testing::ScriptedBackend::fixed(kStop);
  dataset::InstructionAnnotation a{"parked", "a9", "w", "Stop right here now", true, false, true};
  PipelineOptions o;
  o.seed = 5;
  auto r = run_scene(stationary_scene(), Condition::instructed(a.text), &a, o, backend);
  CHECK(r.annotation_id == "a9");
  CHECK(r.word_count == 4);
  CHECK(r.referentiality == dataset::Referentiality::kStaticOnly);
  CHECK(r.parse_tier == 1);
  CHECK(r.seed == 5);
  CHECK(r.stage_texts.size() == 4);
  CHECK(r.ground_truth.size() == 10);
  CHECK_FALSE(r.meta.started_at.empty());
}

TEST_CASE("demo batch produces baseline and instructed records") {
  testing::TempDir dir;
  auto summary = run_batch(demo_config(dir / "r.jsonl"));
  CHECK(summary.scenes == 5);
  CHECK(summary.completed == 13);
  CHECK(summary.failed == 0);
  auto log = results::read_log(dir / "r.jsonl");
  CHECK(log.records.size() == 13);
  CHECK(log.header.template_version == "v1");
  std::set<std::string> keys;
  for (const auto& r : log.records) keys.insert(results::triple_key(r));
  CHECK(keys.size() == 13);
}

TEST_CASE("same seed, same log; concurrency does not change it") {
  testing::TempDir dir;
  run_batch(demo_config(dir / "a.jsonl"));
  run_batch(demo_config(dir / "b.jsonl"));
  auto cfg = demo_config(dir / "c.jsonl");
  cfg.max_in_flight = 4;
  run_batch(cfg);
  auto a = stripped_records(dir / "a.jsonl");
  CHECK(a.size() == 13);
  CHECK(a == stripped_records(dir / "b.jsonl"));
  CHECK(a == stripped_records(dir / "c.jsonl"));
}

TEST_CASE("resume skips finished work and repairs a torn tail") {
  testing::TempDir dir;
  auto full = dir / "full.jsonl";
  run_batch(demo_config(full));
  std::string content = testing::read_file(full);
  // Keep the header, four records and half of the fifth.
  std::size_t cut = 0;
  for (int i = 0; i < 5; ++i) cut = content.find('\n', cut) + 1;
  std::size_t next = content.find('\n', cut);
  auto partial = dir / "partial.jsonl";
  testing::write_file(partial, content.substr(0, cut + (next - cut) / 2));

  auto summary = run_batch(demo_config(partial));
  CHECK(summary.skipped == 4);
  CHECK(summary.completed == 9);
  CHECK(stripped_records(partial) == stripped_records(full));

  auto again = run_batch(demo_config(partial));
  CHECK(again.skipped == 13);
  CHECK(again.completed == 0);
}

TEST_CASE("condition selection and bookkeeping") {
  testing::TempDir dir;
  auto cfg = demo_config(dir / "b.jsonl");
  cfg.run_instructed = false;
  CHECK(run_batch(cfg).completed == 5);
  cfg.output_path = dir / "i.jsonl";
  cfg.run_baseline = false;
  cfg.run_instructed = true;
  CHECK(run_batch(cfg).completed == 8);

  testing::write_file(dir / "ann.csv",
                      "scene_id,annotation_id,annotator_id,text,refs_static,refs_dynamic,actionable\n"
                      "demo-001,x1,w,Stop,false,false,true\n"
                      "ghost,x2,w,Stop,false,false,true\n"
                      "demo-002,x3,w,,false,false,false\n");
  cfg = demo_config(dir / "x.jsonl");
  cfg.annotations_path = dir / "ann.csv";
  auto s = run_batch(cfg);
  CHECK(s.rejected_annotations == 1);
  CHECK(s.non_actionable == 1);
  CHECK(s.completed == 6);

  cfg.output_path = dir / "h.jsonl";
  cfg.horizon = 8;
  CHECK_THROWS_AS(run_batch(cfg), Error);
}

TEST_CASE("a failing backend still yields one record per item") {
  testing::TempDir dir;
  testing::ScriptedBackend hopeless([](Stage s, const auto&) -> std::string {
    return s == Stage::kTrajectoryRequest ? "Speeds: [1, 2]\nCurvatures: [0, 0]" : "ok";
  });
  auto summary = run_batch(demo_config(dir / "f.jsonl"), &hopeless);
  CHECK(summary.completed == 13);
  CHECK(summary.failed == 13);
  CHECK(summary.parse_tiers.at(0) == 13);
  auto log = results::read_log(dir / "f.jsonl");
  CHECK(log.records[0].failure->starts_with("parse: WrongArity"));
}

}  // TEST_SUITE
