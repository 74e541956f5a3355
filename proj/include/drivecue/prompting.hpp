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

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "drivecue/dataset.hpp"

namespace drivecue::prompting {

enum class Stage {
  kSceneDescription,
  kObjectIdentification,
  kIntentEstimation,
  kTrajectoryRequest,
};

inline constexpr std::array<Stage, 4> kAllStages = {
    Stage::kSceneDescription, Stage::kObjectIdentification,
    Stage::kIntentEstimation, Stage::kTrajectoryRequest};

// Stable identifiers used in logs, mock scripts and the HTTP API.
std::string_view stage_name(Stage stage);
std::optional<Stage> stage_from_name(std::string_view name);

// A substring unique to the template of `stage`; lets a backend tell stages
// apart from the prompt bytes alone.
std::string_view stage_marker(Stage stage);

class Condition {
 public:
  static Condition baseline() { return Condition{}; }
  static Condition instructed(std::string instruction) {
    Condition c;
    c.instruction_ = std::move(instruction);
    return c;
  }

  bool is_instructed() const { return instruction_.has_value(); }
  const std::optional<std::string>& instruction() const { return instruction_; }

 private:
  std::optional<std::string> instruction_;
};

enum class InjectionMode {
  kAllStages,
  kSceneDescriptionOnly,
};

struct PromptOptions {
  InjectionMode injection = InjectionMode::kAllStages;
  std::size_t horizon = dataset::kDefaultHorizon;
  double dt_seconds = dataset::kDefaultDtSeconds;
  std::size_t image_count = 1;
};

struct PromptStage {
  Stage stage = Stage::kSceneDescription;
  std::string text;
  std::size_t image_count = 0;
};

// Separator placed between a stage prompt and the injected passenger block.
inline constexpr std::string_view kInjectionSeparator = "\n\n";

// The passenger sentence pair with `instruction` substituted verbatim.
std::string injection_block(std::string_view instruction);

std::string_view template_version();
std::string_view system_prompt();

// All builders throw Error{kInvalidArgument} when an instructed condition
// carries empty or whitespace-only text.
PromptStage build_scene_description_prompt(const Condition& condition,
                                           const PromptOptions& options = {});
PromptStage build_object_identification_prompt(const Condition& condition,
                                               const PromptOptions& options = {});
PromptStage build_intent_prompt(const Condition& condition,
                                std::optional<std::string_view> prior_intent = {},
                                const PromptOptions& options = {});

struct StageOutputs {
  std::string scene_description;
  std::string object_identification;
  std::string intent;
};

PromptStage build_trajectory_prompt(const Condition& condition,
                                    const StageOutputs& outputs,
                                    std::string_view ego_summary,
                                    const PromptOptions& options = {});

// Extra request appended to the trajectory prompt when its answer was unreadable.
std::string reprompt_suffix(std::size_t horizon);

// Last-pose speed and heading, recent headings and displacement over the
// observation window, one fact per line.
std::string summarize_ego(std::span<const dataset::EgoState> history);

// Returns the passenger instruction embedded in a prompt, if any.
std::optional<std::string> extract_instruction(std::string_view prompt);

}  // namespace drivecue::prompting
