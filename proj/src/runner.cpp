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

#include "drivecue/runner.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "drivecue/error.hpp"
#include "drivecue/kinematics.hpp"
#include "drivecue/results_log.hpp"
#include "text_util.hpp"

namespace drivecue::runner {

namespace {

using Clock = std::chrono::steady_clock;
using prompting::Condition;
using prompting::PromptStage;

std::string utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()) % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof(out), "%s.%03dZ", buf, static_cast<int>(ms.count()));
  return out;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

FailureKind failure_kind_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kTransport: return FailureKind::kTransport;
    case ErrorCode::kAuth: return FailureKind::kAuth;
    case ErrorCode::kHttpStatus:
    case ErrorCode::kResponseSchema: return FailureKind::kBackend;
    case ErrorCode::kParse: return FailureKind::kParse;
    case ErrorCode::kIo: return FailureKind::kIo;
    default: return FailureKind::kBackend;
  }
}

class StageCaller {
 public:
  StageCaller(PlanResult& out, const PipelineOptions& options, vlm::Backend& backend,
              std::vector<vlm::ImagePayload> images)
      : out_(out), options_(options), backend_(backend), images_(std::move(images)) {}

  std::string call(prompting::Stage stage, const std::string& prompt) {
    vlm::ModelRequest req;
    req.system_text = std::string(prompting::system_prompt());
    req.user_text = prompt;
    req.images = images_;
    req.temperature = options_.temperature;
    req.max_tokens = options_.max_tokens;
    req.seed = options_.seed;
    StageExchange ex{stage, prompt, {}, images_.size(), 0.0};
    out_.exchanges.push_back(ex);
    vlm::ModelResponse res = backend_.complete(req);
    out_.exchanges.back().response = res.text;
    out_.exchanges.back().latency = res.latency;
    return res.text;
  }

 private:
  PlanResult& out_;
  const PipelineOptions& options_;
  vlm::Backend& backend_;
  std::vector<vlm::ImagePayload> images_;
};

std::string require_text(const std::string& response, const char* stage) {
  std::string_view t = text::trim(response);
  if (t.empty()) {
    throw parser::ParseError(parser::ParseFailure::kEmptyResponse,
                             std::string("empty ") + stage + " response");
  }
  return std::string(t);
}

}  // namespace

const char* to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::kNone: return "none";
    case FailureKind::kTransport: return "transport";
    case FailureKind::kAuth: return "auth";
    case FailureKind::kBackend: return "backend";
    case FailureKind::kParse: return "parse";
    case FailureKind::kIo: return "io";
  }
  return "unknown";
}

PlanResult plan_scene(const dataset::SceneRecord& scene, const Condition& condition,
                      const PipelineOptions& options, vlm::Backend& backend) {
  if (condition.is_instructed() && text::trim(*condition.instruction()).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "instruction is empty");
  }
  if (scene.ground_truth.size() != options.horizon) {
    throw Error(ErrorCode::kInvalidArgument,
                "scene '" + scene.scene_id + "' ground truth length differs from horizon");
  }
  const auto t0 = Clock::now();
  PlanResult out;
  out.backend_id = backend.id();
  try {
    const std::size_t n = std::min(options.frames_per_call, scene.frames.size());
    if (n == 0) {
      throw Error(ErrorCode::kIo, "scene '" + scene.scene_id + "' has no frames to attach");
    }
    std::vector<vlm::ImagePayload> images;
    for (std::size_t i = scene.frames.size() - n; i < scene.frames.size(); ++i) {
      std::filesystem::path p = scene.frames[i].path;
      if (p.is_relative() && !options.frames_dir.empty()) p = options.frames_dir / p;
      if (backend.needs_image_bytes()) {
        images.push_back(vlm::load_image(p));
      } else {
        images.push_back({scene.frames[i].path, "image/jpeg", {}});
      }
    }

    prompting::PromptOptions po;
    po.injection = options.injection;
    po.horizon = options.horizon;
    po.dt_seconds = options.dt_seconds;
    po.image_count = n;

    StageCaller caller(out, options, backend, std::move(images));
    using prompting::Stage;
    prompting::StageOutputs outputs;
    outputs.scene_description = require_text(
        caller.call(Stage::kSceneDescription,
                    prompting::build_scene_description_prompt(condition, po).text),
        "scene description");
    outputs.object_identification = require_text(
        caller.call(Stage::kObjectIdentification,
                    prompting::build_object_identification_prompt(condition, po).text),
        "object identification");
    outputs.intent = parser::parse_intent_text(caller.call(
        Stage::kIntentEstimation, prompting::build_intent_prompt(condition, {}, po).text));

    const std::string ego = prompting::summarize_ego(scene.ego_history);
    const PromptStage traj = prompting::build_trajectory_prompt(condition, outputs, ego, po);
    for (std::size_t attempt = 0;; ++attempt) {
      std::string prompt = traj.text;
      if (attempt > 0) prompt += prompting::reprompt_suffix(options.horizon);
      std::string response = caller.call(Stage::kTrajectoryRequest, prompt);
      try {
        out.parsed = parser::parse_trajectory_text(response, options.horizon, options.max_curvature);
        out.reprompts = attempt;
        break;
      } catch (const parser::ParseError&) {
        if (attempt >= options.reprompt_limit) {
          out.reprompts = attempt;
          throw;
        }
      }
    }

    kinematics::Trajectory ego_traj = kinematics::integrate(out.parsed->sequence, options.dt_seconds);
    kinematics::Pose start = kinematics::initial_pose_from_history(scene.ego_history);
    kinematics::Trajectory global = kinematics::to_global(ego_traj, start);
    out.ego_points = std::move(ego_traj.points);
    out.global_points = std::move(global.points);
    out.ade = metrics::ade(out.global_points, scene.ground_truth);
    out.out_of_bounds = metrics::out_of_bounds(out.global_points, scene.bounds, options.oob_margin);
  } catch (const parser::ParseError& e) {
    out.failure = FailureKind::kParse;
    out.failure_message = std::string(parser::to_string(e.failure())) + ": " + e.what();
  } catch (const Error& e) {
    out.failure = failure_kind_for(e.code());
    out.failure_message = e.what();
  }
  if (!out.ok()) {
    out.ade.reset();
    out.out_of_bounds = false;
  }
  out.elapsed_seconds = seconds_since(t0);
  return out;
}

metrics::EvaluationRecord run_scene(const dataset::SceneRecord& scene, const Condition& condition,
                                    const dataset::InstructionAnnotation* annotation,
                                    const PipelineOptions& options, vlm::Backend& backend) {
  metrics::EvaluationRecord rec;
  rec.meta.started_at = utc_now();
  PlanResult plan = plan_scene(scene, condition, options, backend);
  rec.meta.finished_at = utc_now();
  rec.meta.elapsed_seconds = plan.elapsed_seconds;

  rec.scene_id = scene.scene_id;
  rec.condition = condition.is_instructed() ? metrics::ConditionKind::kInstructed
                                            : metrics::ConditionKind::kBaseline;
  if (condition.is_instructed()) {
    rec.instruction_text = *condition.instruction();
    rec.word_count = metrics::word_count(*condition.instruction());
    if (annotation) {
      rec.annotation_id = annotation->annotation_id;
      rec.referentiality =
          metrics::referentiality_category(annotation->refs_static, annotation->refs_dynamic);
    }
  }
  rec.ade = plan.ade;
  rec.out_of_bounds = plan.out_of_bounds;
  rec.parse_tier = plan.parsed && plan.ok() ? static_cast<int>(plan.parsed->tier) : 0;
  if (!plan.ok()) rec.failure = std::string(to_string(plan.failure)) + ": " + plan.failure_message;
  if (plan.parsed) {
    rec.clamp_count = plan.parsed->clamp_count;
    rec.speeds = plan.parsed->sequence.speeds;
    rec.curvatures = plan.parsed->sequence.curvatures;
  }
  rec.reprompts = plan.reprompts;
  rec.backend_id = plan.backend_id;
  rec.seed = options.seed;
  rec.predicted = plan.global_points;
  rec.ground_truth = scene.ground_truth;
  rec.bounds = scene.bounds;
  for (const auto& ex : plan.exchanges) rec.stage_texts.push_back(ex.response);
  return rec;
}

RunSummary run_batch(const RunConfig& config, vlm::Backend* backend_override) {
  const dataset::Manifest manifest = dataset::load_scenes(config.manifest_path);
  if (config.horizon && *config.horizon != manifest.horizon) {
    throw Error(ErrorCode::kInvalidArgument,
                "configured horizon " + std::to_string(*config.horizon) +
                    " differs from manifest horizon " + std::to_string(manifest.horizon));
  }
  if (config.max_in_flight < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max in-flight requests must be >= 1");
  }
  PipelineOptions options = config.pipeline;
  options.horizon = manifest.horizon;
  options.dt_seconds = config.dt_seconds.value_or(manifest.dt_seconds);
  if (options.frames_dir.empty()) options.frames_dir = manifest.base_dir;

  std::vector<dataset::InstructionAnnotation> annotations;
  if (config.annotations_path) annotations = dataset::load_annotations(*config.annotations_path);
  const dataset::JoinResult joined = dataset::join_scene_annotations(manifest.scenes, annotations);

  RunSummary summary;
  summary.scenes = manifest.scenes.size();
  summary.rejected_annotations = joined.rejects.size();

  struct WorkItem {
    const dataset::SceneRecord* scene;
    std::optional<dataset::InstructionAnnotation> annotation;
  };
  std::vector<WorkItem> items;
  for (const auto& pair : joined.pairs) {
    if (config.run_baseline) items.push_back({pair.scene, std::nullopt});
    if (!config.run_instructed) continue;
    for (const auto& a : pair.annotations) {
      if (!a.actionable) {
        ++summary.non_actionable;
        continue;
      }
      items.push_back({pair.scene, a});
    }
  }
  summary.planned = items.size();

  std::unique_ptr<vlm::Backend> owned;
  vlm::Backend* backend = backend_override;
  if (!backend) {
    owned = vlm::make_backend(config.backend);
    backend = owned.get();
  }

  // Resume: keep complete lines, drop a torn tail, skip finished triples.
  std::set<std::string> done;
  const auto& out_path = config.output_path;
  std::error_code ec;
  bool fresh = !std::filesystem::exists(out_path, ec) || std::filesystem::file_size(out_path, ec) == 0;
  if (!fresh) {
    results::Log log = results::read_log(out_path);
    if (log.header.horizon != 0 && log.header.horizon != manifest.horizon) {
      throw Error(ErrorCode::kInvalidArgument, "existing results log uses a different horizon");
    }
    for (const auto& r : log.records) done.insert(results::triple_key(r));
    if (std::filesystem::file_size(out_path) > log.valid_bytes) {
      std::filesystem::resize_file(out_path, log.valid_bytes);
    }
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::kIo, "cannot write results log '" + out_path.string() + "'");
  if (fresh) {
    results::Header h;
    h.template_version = std::string(prompting::template_version());
    h.horizon = manifest.horizon;
    h.dt_seconds = options.dt_seconds;
    h.manifest = config.manifest_path.string();
    h.backend_id = backend->id();
    out << results::header_to_line(h) << '\n';
    out.flush();
  }

  std::vector<const WorkItem*> pending;
  for (const auto& item : items) {
    std::string key = results::triple_key(
        item.scene->scene_id,
        item.annotation ? metrics::ConditionKind::kInstructed : metrics::ConditionKind::kBaseline,
        item.annotation ? item.annotation->annotation_id : "");
    if (done.contains(key)) {
      ++summary.skipped;
    } else {
      pending.push_back(&item);
    }
  }

  // Records are committed in work-item order so the log does not depend on
  // scheduling when K > 1.
  std::mutex mu;
  std::vector<std::optional<metrics::EvaluationRecord>> ready(pending.size());
  std::size_t next_to_write = 0;
  std::atomic<std::size_t> next_item{0};
  std::exception_ptr error;

  auto commit = [&](std::size_t index, metrics::EvaluationRecord rec) {
    std::lock_guard lock(mu);
    ready[index] = std::move(rec);
    while (next_to_write < ready.size() && ready[next_to_write]) {
      const auto& r = *ready[next_to_write];
      out << results::record_to_line(r) << '\n';
      out.flush();
      if (!out) throw Error(ErrorCode::kIo, "failed writing results log");
      ++summary.completed;
      if (r.failed()) ++summary.failed;
      summary.clamps += r.clamp_count;
      ++summary.parse_tiers[r.parse_tier];
      ready[next_to_write].reset();
      ++next_to_write;
    }
  };

  auto worker = [&] {
    for (;;) {
      std::size_t i = next_item.fetch_add(1);
      if (i >= pending.size()) return;
      {
        std::lock_guard lock(mu);
        if (error) return;
      }
      try {
        const WorkItem& item = *pending[i];
        Condition cond = item.annotation ? Condition::instructed(item.annotation->text)
                                         : Condition::baseline();
        commit(i, run_scene(*item.scene, cond, item.annotation ? &*item.annotation : nullptr,
                            options, *backend));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  const std::size_t k = std::min(config.max_in_flight, std::max<std::size_t>(pending.size(), 1));
  {
    std::vector<std::jthread> threads;
    for (std::size_t t = 1; t < k; ++t) threads.emplace_back(worker);
    worker();
  }
  if (error) std::rethrow_exception(error);
  return summary;
}

}  // namespace drivecue::runner
