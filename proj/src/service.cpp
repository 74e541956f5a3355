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

#include "drivecue/service.hpp"

#include <algorithm>
#include <semaphore>

#include <httplib.h>
#include <json.hpp>

#include "drivecue/dataset.hpp"
#include "drivecue/error.hpp"
#include "drivecue/metrics.hpp"
#include "text_util.hpp"

namespace drivecue::service {

using nlohmann::ordered_json;

namespace {

constexpr std::ptrdiff_t kMaxSlots = 1024;

ordered_json points(const std::vector<Vec2>& v) {
  ordered_json a = ordered_json::array();
  for (const auto& p : v) a.push_back({p.x, p.y});
  return a;
}

void send_json(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code,
                const std::string& message) {
  send_json(res, status, {{"code", code}, {"message", message}});
}

}  // namespace

struct Service::Impl {
  ServiceConfig config;
  dataset::Manifest manifest;
  std::vector<dataset::InstructionAnnotation> annotations;
  std::unique_ptr<vlm::Backend> backend;
  std::counting_semaphore<kMaxSlots> slots;
  httplib::Server server;

  Impl(ServiceConfig cfg, std::unique_ptr<vlm::Backend> be)
      : config(std::move(cfg)),
        manifest(dataset::load_scenes(config.manifest_path)),
        backend(std::move(be)),
        slots(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config.max_in_flight, 1, kMaxSlots))) {
    if (config.annotations_path) annotations = dataset::load_annotations(*config.annotations_path);
    if (!backend) backend = vlm::make_backend(config.backend);
    config.pipeline.horizon = manifest.horizon;
    config.pipeline.dt_seconds = manifest.dt_seconds;
    if (config.pipeline.frames_dir.empty()) config.pipeline.frames_dir = manifest.base_dir;
    routes();
  }

  std::optional<std::string> frame_url(const std::string& path) const {
    std::filesystem::path p(path);
    if (p.is_absolute()) {
      auto rel = p.lexically_relative(config.pipeline.frames_dir);
      if (rel.empty() || *rel.begin() == "..") return std::nullopt;
      p = rel;
    }
    return "/frames/" + p.generic_string();
  }

  ordered_json annotation_json(const dataset::InstructionAnnotation& a) const {
    auto ref = metrics::referentiality_category(a.refs_static, a.refs_dynamic);
    return {{"annotation_id", a.annotation_id},
            {"annotator_id", a.annotator_id},
            {"text", a.text},
            {"refs_static", a.refs_static},
            {"refs_dynamic", a.refs_dynamic},
            {"actionable", a.actionable},
            {"referentiality", metrics::to_string(ref)},
            {"word_count", metrics::word_count(a.text)},
            {"length_bucket", metrics::to_string(metrics::length_bucket(a.text))}};
  }

  void list_scenes(httplib::Response& res) const {
    std::vector<const dataset::SceneRecord*> sorted;
    for (const auto& s : manifest.scenes) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return a->scene_id < b->scene_id; });
    ordered_json out = ordered_json::array();
    for (const auto* s : sorted) {
      out.push_back({{"scene_id", s->scene_id},
                     {"frame_count", s->frames.size()},
                     {"has_ground_truth", !s->ground_truth.empty()}});
    }
    send_json(res, 200, out);
  }

  void scene_detail(const dataset::SceneRecord& s, httplib::Response& res) const {
    ordered_json frames = ordered_json::array();
    for (const auto& f : s.frames) {
      auto url = frame_url(f.path);
      frames.push_back({{"path", f.path}, {"t", f.t}, {"url", url ? ordered_json(*url) : ordered_json(nullptr)}});
    }
    ordered_json history = ordered_json::array();
    for (const auto& e : s.ego_history) {
      history.push_back({{"t", e.t}, {"x", e.position.x}, {"y", e.position.y},
                         {"heading", e.heading}, {"speed", e.speed}});
    }
    ordered_json anns = ordered_json::array();
    for (const auto& a : annotations) {
      if (a.scene_id == s.scene_id) anns.push_back(annotation_json(a));
    }
    send_json(res, 200,
              {{"scene_id", s.scene_id},
               {"dt_seconds", manifest.dt_seconds},
               {"horizon", manifest.horizon},
               {"frames", std::move(frames)},
               {"ego_history", std::move(history)},
               {"ground_truth", points(s.ground_truth)},
               {"bounds", {{"min_x", s.bounds.min_x}, {"min_y", s.bounds.min_y},
                           {"max_x", s.bounds.max_x}, {"max_y", s.bounds.max_y}}},
               {"annotations", std::move(anns)}});
  }

  void plan(const dataset::SceneRecord& scene, const httplib::Request& req,
            httplib::Response& res) {
    ordered_json body = ordered_json::object();
    if (!text::trim(req.body).empty()) {
      try {
        body = ordered_json::parse(req.body);
      } catch (const ordered_json::parse_error&) {
        return send_error(res, 400, "bad_request", "request body is not valid JSON");
      }
      if (!body.is_object()) return send_error(res, 400, "bad_request", "request body must be an object");
    }
    prompting::Condition condition = prompting::Condition::baseline();
    if (body.contains("instruction") && !body["instruction"].is_null()) {
      if (!body["instruction"].is_string()) {
        return send_error(res, 400, "bad_request", "instruction must be a string");
      }
      std::string instruction = body["instruction"].get<std::string>();
      if (text::trim(instruction).empty()) {
        return send_error(res, 422, "invalid_instruction", "instruction is empty");
      }
      condition = prompting::Condition::instructed(std::move(instruction));
    }
    runner::PipelineOptions options = config.pipeline;
    if (body.contains("seed") && !body["seed"].is_null()) {
      if (!body["seed"].is_number_integer()) {
        return send_error(res, 400, "bad_request", "seed must be an integer");
      }
      options.seed = body["seed"].get<std::int64_t>();
    }

    if (config.queue) {
      slots.acquire();
    } else if (!slots.try_acquire()) {
      return send_error(res, 409, "busy", "planner busy");
    }
    runner::PlanResult plan;
    try {
      plan = runner::plan_scene(scene, condition, options, *backend);
    } catch (...) {
      slots.release();
      throw;
    }
    slots.release();

    ordered_json stages = ordered_json::array();
    for (const auto& ex : plan.exchanges) {
      stages.push_back({{"stage", prompting::stage_name(ex.stage)},
                        {"prompt", ex.prompt},
                        {"response", ex.response},
                        {"image_count", ex.image_count}});
    }
    if (!plan.ok()) {
      ordered_json err = {{"code", plan.failure == runner::FailureKind::kParse ? "parse_failure"
                                                                             : "backend_failure"},
                          {"message", std::string(runner::to_string(plan.failure)) + ": " +
                                          plan.failure_message},
                          {"stages", std::move(stages)}};
      return send_json(res, 502, err);
    }
    ordered_json out;
    out["scene_id"] = scene.scene_id;
    out["condition"] = condition.is_instructed() ? "instructed" : "baseline";
    out["instruction"] = condition.is_instructed() ? ordered_json(*condition.instruction()) : ordered_json(nullptr);
    out["seed"] = options.seed ? ordered_json(*options.seed) : ordered_json(nullptr);
    out["stages"] = std::move(stages);
    out["speeds"] = plan.parsed->sequence.speeds;
    out["curvatures"] = plan.parsed->sequence.curvatures;
    out["parse_tier"] = static_cast<int>(plan.parsed->tier);
    out["clamp_count"] = plan.parsed->clamp_count;
    out["reprompts"] = plan.reprompts;
    out["ego_waypoints"] = points(plan.ego_points);
    out["global_waypoints"] = points(plan.global_points);
    out["ade"] = *plan.ade;
    out["out_of_bounds"] = plan.out_of_bounds;
    if (condition.is_instructed()) {
      out["word_count"] = metrics::word_count(*condition.instruction());
      out["length_bucket"] = metrics::to_string(metrics::length_bucket(*condition.instruction()));
    } else {
      out["word_count"] = nullptr;
      out["length_bucket"] = nullptr;
    }
    out["backend_id"] = plan.backend_id;
    out["elapsed_seconds"] = plan.elapsed_seconds;
    send_json(res, 200, out);
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", config.cors_origin}});
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });
    server.Get("/api/scenes", [this](const httplib::Request&, httplib::Response& res) {
      list_scenes(res);
    });
    server.Get(R"(/api/scenes/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const auto* s = manifest.find(req.matches[1].str());
      if (!s) return send_error(res, 404, "not_found", "unknown scene '" + req.matches[1].str() + "'");
      scene_detail(*s, res);
    });
    server.Post(R"(/api/scenes/([^/]+)/plan)", [this](const httplib::Request& req, httplib::Response& res) {
      const auto* s = manifest.find(req.matches[1].str());
      if (!s) return send_error(res, 404, "not_found", "unknown scene '" + req.matches[1].str() + "'");
      plan(*s, req, res);
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      } catch (...) {
        send_error(res, 500, "internal", "unknown error");
      }
    });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        send_error(res, res.status, res.status == 404 ? "not_found" : "error",
                   "HTTP " + std::to_string(res.status));
      }
    });
    if (!config.pipeline.frames_dir.empty() && std::filesystem::is_directory(config.pipeline.frames_dir)) {
      server.set_mount_point("/frames", config.pipeline.frames_dir.string());
    }
  }
};

Service::Service(ServiceConfig config, std::unique_ptr<vlm::Backend> backend)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(backend))) {}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host)
                        : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  return bound;
}

void Service::listen_after_bind() { impl_->server.listen_after_bind(); }

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

void Service::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

std::size_t Service::scene_count() const { return impl_->manifest.scenes.size(); }

}  // namespace drivecue::service
