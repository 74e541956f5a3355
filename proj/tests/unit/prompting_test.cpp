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

#include <random>

#include "drivecue/error.hpp"
#include "drivecue/prompting.hpp"
#include "test_support.hpp"

using namespace drivecue;
using namespace drivecue::prompting;

namespace {

const StageOutputs kOutputs{"A quiet street.", "1. A parked van on the right.", "Go straight at 5 m/s."};
const std::string kEgo = "Current speed: 5.00 m/s";

std::vector<PromptStage> all_prompts(const Condition& c, const PromptOptions& o = {}) {
  return {build_scene_description_prompt(c, o), build_object_identification_prompt(c, o),
          build_intent_prompt(c, std::nullopt, o), build_intent_prompt(c, "Turn left slowly.", o),
          build_trajectory_prompt(c, kOutputs, kEgo, o)};
}

}  // namespace

TEST_SUITE("prompting") {

TEST_CASE("stage names round-trip and markers are unique to their stage") {
  for (Stage s : kAllStages) {
    CHECK(stage_from_name(stage_name(s)) == s);
  }
  CHECK_FALSE(stage_from_name("bogus"));
  auto prompts = all_prompts(Condition::baseline());
  for (const auto& p : prompts) {
    for (Stage s : kAllStages) {
      bool has = p.text.find(stage_marker(s)) != std::string::npos;
      CHECK_MESSAGE(has == (s == p.stage), stage_name(p.stage), " vs marker ", stage_name(s));
    }
  }
}

TEST_CASE("instructed prompt equals baseline plus one injection block") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    std::string instr = testing::random_instruction(rng);
    auto base = all_prompts(Condition::baseline());
    auto inst = all_prompts(Condition::instructed(instr));
    for (std::size_t k = 0; k < base.size(); ++k) {
      CHECK(inst[k].text == base[k].text + "\n\n" + testing::expected_injection(instr));
      CHECK(extract_instruction(inst[k].text) == instr);
      CHECK_FALSE(extract_instruction(base[k].text));
    }
  }
}

TEST_CASE("injection block carries the instruction verbatim") {
  std::string block = injection_block("Stop {{horizon}} now");
  CHECK(block == testing::expected_injection("Stop {{horizon}} now"));
  CHECK(block.find("{{horizon}}") != std::string::npos);
  CHECK(block.starts_with("The passenger says: \"Stop"));
}

TEST_CASE("scene-description-only mode injects a single stage") {
  PromptOptions o;
  o.injection = InjectionMode::kSceneDescriptionOnly;
  auto base = all_prompts(Condition::baseline(), o);
  auto inst = all_prompts(Condition::instructed("Turn right"), o);
  CHECK(inst[0].text == base[0].text + "\n\n" + testing::expected_injection("Turn right"));
  for (std::size_t k = 1; k < base.size(); ++k) CHECK(inst[k].text == base[k].text);
}

TEST_CASE("blank instructions are rejected") {
  for (const char* blank : {"", "   ", "\t\n"}) {
    CHECK_THROWS_AS(build_scene_description_prompt(Condition::instructed(blank)), Error);
    CHECK_THROWS_AS(build_trajectory_prompt(Condition::instructed(blank), kOutputs, kEgo), Error);
  }
}

TEST_CASE("trajectory prompt lists horizon slots and upstream answers") {
  PromptOptions o;
  o.horizon = 10;
  o.dt_seconds = 0.5;
  auto p = build_trajectory_prompt(Condition::baseline(), kOutputs, kEgo, o);
  CHECK(p.text.find("Speeds: [s1, s2, ..., s10]") != std::string::npos);
  CHECK(p.text.find("Curvatures: [c1, c2, ..., c10]") != std::string::npos);
  CHECK(p.text.find("next 10 steps at 0.5 s") != std::string::npos);
  CHECK(p.text.find(kOutputs.intent) != std::string::npos);
  CHECK(p.text.find(kEgo) != std::string::npos);
  o.horizon = 3;
  CHECK(build_trajectory_prompt(Condition::baseline(), kOutputs, kEgo, o).text.find("Speeds: [s1, s2, s3]") !=
        std::string::npos);
  CHECK_THROWS_AS(build_trajectory_prompt(Condition::baseline(), {"", "x", "y"}, kEgo), Error);
}

TEST_CASE("upstream text with placeholders is not expanded") {
  StageOutputs tricky{"{{horizon}} {{intent}}", "{{", "}}"};
  auto p = build_trajectory_prompt(Condition::baseline(), tricky, kEgo);
  CHECK(p.text.find("{{horizon}} {{intent}}") != std::string::npos);
}

TEST_CASE("image-bearing stages need a frame") {
  PromptOptions o;
  o.image_count = 0;
  CHECK_THROWS_AS(build_scene_description_prompt(Condition::baseline(), o), Error);
  CHECK_THROWS_AS(build_object_identification_prompt(Condition::baseline(), o), Error);
  o.image_count = 6;
  CHECK(build_scene_description_prompt(Condition::baseline(), o).image_count == 6);
}

TEST_CASE("prior intent is quoted in the follow-up") {
  auto p = build_intent_prompt(Condition::baseline(), "Keep lane at 8 m/s.");
  CHECK(p.text.find("Keep lane at 8 m/s.") != std::string::npos);
  CHECK(p.text.find(stage_marker(Stage::kIntentEstimation)) != std::string::npos);
}

TEST_CASE("ego summary") {
  std::vector<dataset::EgoState> h = {{0.0, {0, 0}, 0.0, 4.0}, {1.5, {6, 0}, 0.0, 4.0}};
  std::string s = summarize_ego(h);
  CHECK(s.find("Current speed: 4.00 m/s") != std::string::npos);
  CHECK(s.find("6.00 m forward, 0.00 m left") != std::string::npos);
  CHECK(s.find("last 1.5 s") != std::string::npos);
  CHECK(summarize_ego({}) == "No ego history available.");
}

TEST_CASE("reprompt suffix and version") {
  CHECK(reprompt_suffix(10).starts_with("\n\n"));
  CHECK(reprompt_suffix(10).find("10 numbers") != std::string::npos);
  CHECK(template_version() == "v1");
  CHECK_FALSE(system_prompt().empty());
}

}  // TEST_SUITE
