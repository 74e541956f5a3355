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

#include "drivecue/prompting.hpp"

#include <cmath>
#include <map>

#include "drivecue/error.hpp"
#include "text_util.hpp"

namespace drivecue::prompting {

namespace detail {
extern const std::string_view kTemplateVersion;
extern const std::pair<std::string_view, std::string_view> kTemplates[];
extern const unsigned kTemplateCount;
}  // namespace detail

namespace {

std::string_view raw_template(std::string_view name) {
  for (unsigned i = 0; i < detail::kTemplateCount; ++i) {
    if (detail::kTemplates[i].first == name) {
      std::string_view body = detail::kTemplates[i].second;
      while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) {
        body.remove_suffix(1);
      }
      return body;
    }
  }
  throw Error(ErrorCode::kInternal, "missing prompt template '" + std::string(name) + "'");
}

// Single pass over the template; substituted values are never rescanned, so
// user text containing braces cannot introduce placeholders.
std::string render(std::string_view tmpl,
                   const std::map<std::string_view, std::string_view>& values) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    std::size_t open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    out.append(tmpl.substr(pos, open - pos));
    std::size_t close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw Error(ErrorCode::kInternal, "unterminated placeholder in prompt template");
    }
    std::string_view name = tmpl.substr(open + 2, close - open - 2);
    auto it = values.find(name);
    if (it == values.end()) {
      throw Error(ErrorCode::kInternal,
                  "unresolved placeholder '" + std::string(name) + "' in prompt template");
    }
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

void require_instruction(const Condition& condition) {
  if (condition.is_instructed() && text::trim(*condition.instruction()).empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "instructed condition requires non-empty instruction text");
  }
}

bool injects(Stage stage, const Condition& condition, const PromptOptions& options) {
  if (!condition.is_instructed()) return false;
  return options.injection == InjectionMode::kAllStages ||
         stage == Stage::kSceneDescription;
}

PromptStage finish(Stage stage, std::string body, const Condition& condition,
                   const PromptOptions& options) {
  if (injects(stage, condition, options)) {
    body.append(kInjectionSeparator);
    body.append(injection_block(*condition.instruction()));
  }
  return PromptStage{stage, std::move(body), options.image_count};
}

void require_images(Stage stage, const PromptOptions& options) {
  if (options.image_count == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(stage_name(stage)) + " prompt needs at least one frame");
  }
}

std::string slots(char letter, std::size_t horizon) {
  auto slot = [&](std::size_t i) { return std::string(1, letter) + std::to_string(i); };
  if (horizon == 0) return {};
  if (horizon <= 3) {
    std::string s = slot(1);
    for (std::size_t i = 2; i <= horizon; ++i) s += ", " + slot(i);
    return s;
  }
  return slot(1) + ", " + slot(2) + ", ..., " + slot(horizon);
}

}  // namespace

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::kSceneDescription: return "scene_description";
    case Stage::kObjectIdentification: return "object_identification";
    case Stage::kIntentEstimation: return "intent";
    case Stage::kTrajectoryRequest: return "trajectory";
  }
  return "unknown";
}

std::optional<Stage> stage_from_name(std::string_view name) {
  for (Stage s : kAllStages) {
    if (stage_name(s) == name) return s;
  }
  return std::nullopt;
}

std::string_view stage_marker(Stage stage) {
  switch (stage) {
    case Stage::kSceneDescription: return "What is going on in the scene?";
    case Stage::kObjectIdentification: return "List two or three of them";
    case Stage::kIntentEstimation: return "Will the car turn left, turn right, or go straight";
    case Stage::kTrajectoryRequest: return "Predict the ego car's next";
  }
  return {};
}

std::string injection_block(std::string_view instruction) {
  return render(raw_template("injection"), {{"instruction", instruction}});
}

std::string_view template_version() { return detail::kTemplateVersion; }

std::string_view system_prompt() { return raw_template("system"); }

PromptStage build_scene_description_prompt(const Condition& condition,
                                           const PromptOptions& options) {
  require_instruction(condition);
  require_images(Stage::kSceneDescription, options);
  return finish(Stage::kSceneDescription,
                std::string(raw_template("scene_description")), condition, options);
}

PromptStage build_object_identification_prompt(const Condition& condition,
                                               const PromptOptions& options) {
  require_instruction(condition);
  require_images(Stage::kObjectIdentification, options);
  return finish(Stage::kObjectIdentification,
                std::string(raw_template("object_identification")), condition, options);
}

PromptStage build_intent_prompt(const Condition& condition,
                                std::optional<std::string_view> prior_intent,
                                const PromptOptions& options) {
  require_instruction(condition);
  std::string body =
      prior_intent ? render(raw_template("intent_followup"), {{"prior_intent", *prior_intent}})
                   : std::string(raw_template("intent"));
  return finish(Stage::kIntentEstimation, std::move(body), condition, options);
}

PromptStage build_trajectory_prompt(const Condition& condition,
                                    const StageOutputs& outputs,
                                    std::string_view ego_summary,
                                    const PromptOptions& options) {
  require_instruction(condition);
  auto require = [](std::string_view value, const char* what) {
    if (text::trim(value).empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("trajectory prompt: missing ") + what + " output");
    }
  };
  require(outputs.scene_description, "scene description");
  require(outputs.object_identification, "object identification");
  require(outputs.intent, "intent");
  if (options.horizon == 0) {
    throw Error(ErrorCode::kInvalidArgument, "trajectory prompt: horizon must be >= 1");
  }

  std::string horizon = std::to_string(options.horizon);
  std::string dt = text::format_double(options.dt_seconds);
  std::string speed_slots = slots('s', options.horizon);
  std::string curvature_slots = slots('c', options.horizon);
  std::string body = render(raw_template("trajectory"),
                            {{"scene_description", outputs.scene_description},
                             {"object_identification", outputs.object_identification},
                             {"intent", outputs.intent},
                             {"ego_summary", ego_summary},
                             {"horizon", horizon},
                             {"dt", dt},
                             {"speed_slots", speed_slots},
                             {"curvature_slots", curvature_slots}});
  return finish(Stage::kTrajectoryRequest, std::move(body), condition, options);
}

std::string reprompt_suffix(std::size_t horizon) {
  std::string h = std::to_string(horizon);
  return std::string(kInjectionSeparator) + render(raw_template("reprompt"), {{"horizon", h}});
}

std::string summarize_ego(std::span<const dataset::EgoState> history) {
  if (history.empty()) return "No ego history available.";
  const auto& last = history.back();
  std::string out;
  out += "Current speed: " + text::format_fixed(last.speed, 2) + " m/s\n";
  out += "Current heading: " + text::format_fixed(last.heading, 3) + " rad\n";

  constexpr std::size_t kRecent = 4;
  std::size_t from = history.size() > kRecent ? history.size() - kRecent : 0;
  out += "Recent headings (oldest to newest):";
  for (std::size_t i = from; i < history.size(); ++i) {
    out += (i == from ? " " : ", ") + text::format_fixed(history[i].heading, 3);
  }
  out += " rad\n";

  // Displacement expressed in the current ego frame (x forward, y left).
  const auto& first = history.front();
  Vec2 d = last.position - first.position;
  double c = std::cos(last.heading);
  double s = std::sin(last.heading);
  double forward = c * d.x + s * d.y;
  double left = -s * d.x + c * d.y;
  out += "Displacement over the last " + text::format_fixed(last.t - first.t, 1) +
         " s: " + text::format_fixed(forward, 2) + " m forward, " +
         text::format_fixed(left, 2) + " m left";
  return out;
}

std::optional<std::string> extract_instruction(std::string_view prompt) {
  std::string_view tmpl = raw_template("injection");
  std::size_t ph = tmpl.find("{{instruction}}");
  std::string_view prefix = tmpl.substr(0, ph);
  std::string_view suffix = tmpl.substr(ph + std::string_view("{{instruction}}").size());
  std::size_t end = prompt.rfind(suffix);
  if (end == std::string_view::npos) return std::nullopt;
  std::size_t start = prompt.rfind(prefix, end);
  if (start == std::string_view::npos) return std::nullopt;
  start += prefix.size();
  return std::string(prompt.substr(start, end - start));
}

}  // namespace drivecue::prompting
