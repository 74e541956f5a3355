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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drivecue/dataset.hpp"
#include "drivecue/metrics.hpp"
#include "drivecue/parser.hpp"
#include "drivecue/prompting.hpp"
#include "drivecue/vlm_client.hpp"

namespace drivecue::runner {

struct PipelineOptions {
  prompting::InjectionMode injection = prompting::InjectionMode::kAllStages;
  std::size_t horizon = dataset::kDefaultHorizon;
  double dt_seconds = dataset::kDefaultDtSeconds;
  std::size_t frames_per_call = 6;
  std::size_t reprompt_limit = 2;
  double temperature = 0.2;
  int max_tokens = 512;
  std::optional<std::int64_t> seed;
  double oob_margin = metrics::kDefaultOobMargin;
  double max_curvature = parser::kDefaultMaxCurvature;
  std::filesystem::path frames_dir;  // relative frame paths resolve here
};

struct StageExchange {
  prompting::Stage stage = prompting::Stage::kSceneDescription;
  std::string prompt;  // exact bytes sent
  std::string response;
  std::size_t image_count = 0;
  double latency = 0.0;
};

enum class FailureKind { kNone, kTransport, kAuth, kBackend, kParse, kIo };

const char* to_string(FailureKind kind);

struct PlanResult {
  std::vector<StageExchange> exchanges;  // in call order, reprompts included
  std::optional<parser::ParsedTrajectory> parsed;
  std::vector<Vec2> ego_points;
  std::vector<Vec2> global_points;
  std::optional<double> ade;
  bool out_of_bounds = false;
  std::size_t reprompts = 0;
  std::string backend_id;
  FailureKind failure = FailureKind::kNone;
  std::string failure_message;
  double elapsed_seconds = 0.0;

  bool ok() const { return failure == FailureKind::kNone; }
};

// Runs scene description, object identification, intent and trajectory
// request in order, then parses, integrates and scores against the scene's
// ground truth. Backend and parse failures are reported in the result; an
// empty instructed condition throws Error{kInvalidArgument}.
PlanResult plan_scene(const dataset::SceneRecord& scene, const prompting::Condition& condition,
                      const PipelineOptions& options, vlm::Backend& backend);

// plan_scene packaged as a results-log record.
metrics::EvaluationRecord run_scene(const dataset::SceneRecord& scene,
                                    const prompting::Condition& condition,
                                    const dataset::InstructionAnnotation* annotation,
                                    const PipelineOptions& options, vlm::Backend& backend);

struct RunConfig {
  std::filesystem::path manifest_path;
  std::optional<std::filesystem::path> annotations_path;
  vlm::BackendConfig backend;
  bool run_baseline = true;
  bool run_instructed = true;
  std::optional<std::size_t> horizon;  // must match the manifest when set
  std::optional<double> dt_seconds;    // overrides the manifest header
  std::size_t max_in_flight = 1;
  PipelineOptions pipeline;
  std::filesystem::path output_path;
};

struct RunSummary {
  std::size_t scenes = 0;
  std::size_t planned = 0;   // work items this run would cover
  std::size_t skipped = 0;   // already present in the log
  std::size_t completed = 0;
  std::size_t failed = 0;
  std::size_t clamps = 0;
  std::size_t rejected_annotations = 0;  // unknown scene_id
  std::size_t non_actionable = 0;
  std::map<int, std::size_t> parse_tiers;  // tier -> count, 0 = failed
};

// One baseline run per scene plus one instructed run per actionable
// annotation, appended to the JSONL log as they finish. Triples already in
// the log are skipped. `backend` overrides config.backend when given.
RunSummary run_batch(const RunConfig& config, vlm::Backend* backend = nullptr);

}  // namespace drivecue::runner
