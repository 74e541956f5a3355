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

#include "drivecue/drivecue.h"

#include <cmath>
#include <cstring>
#include <memory>
#include <new>
#include <set>
#include <string>

#include <json.hpp>

#include "drivecue/dataset.hpp"
#include "drivecue/error.hpp"
#include "drivecue/kinematics.hpp"
#include "drivecue/metrics.hpp"
#include "drivecue/parser.hpp"
#include "drivecue/report.hpp"
#include "drivecue/results_log.hpp"
#include "drivecue/runner.hpp"
#include "drivecue/service.hpp"

using nlohmann::json;
using drivecue::Error;
using drivecue::ErrorCode;

struct dc_string {
  std::string value;
};

struct dc_dataset {
  drivecue::dataset::Manifest manifest;
};

struct dc_server {
  std::unique_ptr<drivecue::service::Service> service;
};

namespace {

thread_local std::string g_last_error;

dc_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return DC_ERR_INVALID_ARGUMENT;
    case ErrorCode::kIo: return DC_ERR_IO;
    case ErrorCode::kSchema: return DC_ERR_SCHEMA;
    case ErrorCode::kParse: return DC_ERR_PARSE;
    case ErrorCode::kTransport: return DC_ERR_TRANSPORT;
    case ErrorCode::kAuth: return DC_ERR_AUTH;
    case ErrorCode::kHttpStatus: return DC_ERR_HTTP_STATUS;
    case ErrorCode::kResponseSchema: return DC_ERR_RESPONSE_SCHEMA;
    case ErrorCode::kNotFound: return DC_ERR_NOT_FOUND;
    case ErrorCode::kBusy: return DC_ERR_BUSY;
    case ErrorCode::kInternal: return DC_ERR_INTERNAL;
  }
  return DC_ERR_INTERNAL;
}

template <typename F>
dc_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return DC_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return DC_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return DC_ERR_INTERNAL;
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, message);
}

void put_string(dc_string** out, std::string value) {
  if (!out) return;
  *out = new dc_string{std::move(value)};
}

json parse_config(const char* text) {
  require(text != nullptr, "config_json is NULL");
  json cfg;
  try {
    cfg = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("config is not valid JSON: ") + e.what());
  }
  require(cfg.is_object(), "config must be a JSON object");
  return cfg;
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    require(allowed.count(key) != 0, "unknown " + where + " key '" + key + "'");
  }
}

drivecue::vlm::BackendConfig backend_from(const json& cfg) {
  drivecue::vlm::BackendConfig b;
  if (cfg.value("use_environment", true)) drivecue::vlm::apply_environment(b);
  if (!cfg.contains("backend")) return b;
  const json& j = cfg.at("backend");
  require(j.is_object(), "backend must be an object");
  check_keys(j, {"kind", "base_url", "api_key", "model", "timeout_seconds", "max_retries", "mock_script"},
             "backend");
  if (j.contains("kind")) {
    std::string kind = j.at("kind").get<std::string>();
    require(kind == "mock" || kind == "http", "backend.kind must be \"mock\" or \"http\"");
    b.kind = kind == "http" ? drivecue::vlm::BackendKind::kHttp : drivecue::vlm::BackendKind::kMock;
  }
  if (j.contains("base_url")) b.http.base_url = j.at("base_url").get<std::string>();
  if (j.contains("api_key")) b.http.api_key = j.at("api_key").get<std::string>();
  if (j.contains("model")) b.http.model = j.at("model").get<std::string>();
  if (j.contains("timeout_seconds")) {
    double t = j.at("timeout_seconds").get<double>();
    require(t > 0, "backend.timeout_seconds must be positive");
    b.http.timeout = std::chrono::milliseconds(static_cast<long long>(t * 1000));
  }
  if (j.contains("max_retries")) {
    int r = j.at("max_retries").get<int>();
    require(r >= 0, "backend.max_retries must be >= 0");
    b.http.max_retries = r;
  }
  if (j.contains("mock_script") && !j.at("mock_script").is_null()) {
    b.mock_script = j.at("mock_script").get<std::string>();
  }
  return b;
}

drivecue::runner::PipelineOptions pipeline_from(const json& cfg) {
  drivecue::runner::PipelineOptions p;
  if (cfg.contains("seed") && !cfg.at("seed").is_null()) p.seed = cfg.at("seed").get<std::int64_t>();
  if (cfg.contains("frames_dir")) p.frames_dir = cfg.at("frames_dir").get<std::string>();
  if (cfg.contains("frames_per_call")) {
    p.frames_per_call = cfg.at("frames_per_call").get<std::size_t>();
    require(p.frames_per_call >= 1, "frames_per_call must be >= 1");
  }
  if (cfg.contains("reprompt_limit")) p.reprompt_limit = cfg.at("reprompt_limit").get<std::size_t>();
  if (cfg.contains("temperature")) p.temperature = cfg.at("temperature").get<double>();
  if (cfg.contains("max_tokens")) p.max_tokens = cfg.at("max_tokens").get<int>();
  if (cfg.contains("oob_margin")) {
    p.oob_margin = cfg.at("oob_margin").get<double>();
    require(p.oob_margin >= 0, "oob_margin must be >= 0");
  }
  if (cfg.contains("max_curvature")) {
    p.max_curvature = cfg.at("max_curvature").get<double>();
    require(p.max_curvature > 0, "max_curvature must be positive");
  }
  if (cfg.contains("injection")) {
    std::string mode = cfg.at("injection").get<std::string>();
    if (mode == "all_stages") {
      p.injection = drivecue::prompting::InjectionMode::kAllStages;
    } else if (mode == "scene_description_only") {
      p.injection = drivecue::prompting::InjectionMode::kSceneDescriptionOnly;
    } else {
      require(false, "injection must be \"all_stages\" or \"scene_description_only\"");
    }
  }
  return p;
}

const std::set<std::string> kCommonKeys = {
    "manifest",     "annotations",     "backend",        "use_environment", "horizon",
    "dt_seconds",   "max_in_flight",   "seed",           "frames_dir",      "frames_per_call",
    "reprompt_limit", "temperature",   "max_tokens",     "oob_margin",      "max_curvature",
    "injection"};

json run_summary_json(const drivecue::runner::RunSummary& s) {
  json tiers = json::object();
  for (const auto& [tier, count] : s.parse_tiers) tiers[std::to_string(tier)] = count;
  return {{"scenes", s.scenes},
          {"planned", s.planned},
          {"skipped", s.skipped},
          {"completed", s.completed},
          {"failed", s.failed},
          {"clamps", s.clamps},
          {"rejected_annotations", s.rejected_annotations},
          {"non_actionable", s.non_actionable},
          {"parse_tiers", tiers}};
}

}  // namespace

extern "C" {

const char* dc_version(void) { return "0.1.0"; }

const char* dc_status_name(dc_status status) {
  switch (status) {
    case DC_OK: return "ok";
    case DC_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case DC_ERR_IO: return "io";
    case DC_ERR_SCHEMA: return "schema";
    case DC_ERR_PARSE: return "parse";
    case DC_ERR_TRANSPORT: return "transport";
    case DC_ERR_AUTH: return "auth";
    case DC_ERR_HTTP_STATUS: return "http_status";
    case DC_ERR_RESPONSE_SCHEMA: return "response_schema";
    case DC_ERR_NOT_FOUND: return "not_found";
    case DC_ERR_BUSY: return "busy";
    case DC_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* dc_last_error(void) { return g_last_error.c_str(); }

const char* dc_string_data(const dc_string* s) { return s ? s->value.c_str() : ""; }
size_t dc_string_size(const dc_string* s) { return s ? s->value.size() : 0; }
void dc_string_free(dc_string* s) { delete s; }

dc_status dc_dataset_open(const char* manifest_path, dc_dataset** out) {
  return guarded([&] {
    require(manifest_path && out, "NULL argument");
    *out = new dc_dataset{drivecue::dataset::load_scenes(manifest_path)};
  });
}

size_t dc_dataset_scene_count(const dc_dataset* ds) { return ds ? ds->manifest.scenes.size() : 0; }

const char* dc_dataset_scene_id(const dc_dataset* ds, size_t index) {
  if (!ds || index >= ds->manifest.scenes.size()) return nullptr;
  return ds->manifest.scenes[index].scene_id.c_str();
}

dc_status dc_dataset_scene_json(const dc_dataset* ds, const char* scene_id, dc_string** out) {
  return guarded([&] {
    require(ds && scene_id && out, "NULL argument");
    const auto* scene = ds->manifest.find(scene_id);
    if (!scene) throw Error(ErrorCode::kNotFound, std::string("unknown scene '") + scene_id + "'");
    drivecue::dataset::Manifest single;
    single.dt_seconds = ds->manifest.dt_seconds;
    single.horizon = ds->manifest.horizon;
    single.scenes.push_back(*scene);
    json doc = json::parse(drivecue::dataset::serialize_manifest(single));
    put_string(out, doc.at("scenes").at(0).dump());
  });
}

void dc_dataset_free(dc_dataset* ds) { delete ds; }

dc_status dc_run_batch(const char* config_json, dc_string** summary_json) {
  return guarded([&] {
    json cfg = parse_config(config_json);
    auto allowed = kCommonKeys;
    allowed.insert({"output", "conditions"});
    check_keys(cfg, allowed, "config");
    require(cfg.contains("manifest"), "config.manifest is required");
    require(cfg.contains("output"), "config.output is required");

    drivecue::runner::RunConfig rc;
    rc.manifest_path = cfg.at("manifest").get<std::string>();
    rc.output_path = cfg.at("output").get<std::string>();
    if (cfg.contains("annotations") && !cfg.at("annotations").is_null()) {
      rc.annotations_path = cfg.at("annotations").get<std::string>();
    }
    std::string conditions = cfg.value("conditions", std::string("both"));
    require(conditions == "both" || conditions == "baseline" || conditions == "instructed",
            "conditions must be \"both\", \"baseline\" or \"instructed\"");
    rc.run_baseline = conditions != "instructed";
    rc.run_instructed = conditions != "baseline";
    rc.backend = backend_from(cfg);
    rc.pipeline = pipeline_from(cfg);
    if (cfg.contains("horizon")) rc.horizon = cfg.at("horizon").get<std::size_t>();
    if (cfg.contains("dt_seconds")) rc.dt_seconds = cfg.at("dt_seconds").get<double>();
    if (cfg.contains("max_in_flight")) {
      rc.max_in_flight = cfg.at("max_in_flight").get<std::size_t>();
      require(rc.max_in_flight >= 1, "max_in_flight must be >= 1");
    }
    auto summary = drivecue::runner::run_batch(rc);
    put_string(summary_json, run_summary_json(summary).dump());
  });
}

dc_status dc_report(const char* results_path, double q, const char* out_dir, dc_string** summary_json) {
  return guarded([&] {
    require(results_path && out_dir, "NULL argument");
    require(q > 0.0 && q < 1.0, "q must be in (0, 1)");
    auto log = drivecue::results::read_log(results_path);
    auto s = drivecue::report::write_report(log, q, out_dir);
    json files = json::array();
    for (const auto& f : s.files) files.push_back(f.string());
    put_string(summary_json, json{{"records", s.records},
                                  {"scenes", s.scenes},
                                  {"dropped", s.dropped},
                                  {"warnings", s.warnings},
                                  {"files", files}}
                                 .dump());
  });
}

dc_status dc_server_create(const char* config_json, dc_server** out) {
  return guarded([&] {
    require(out != nullptr, "NULL argument");
    json cfg = parse_config(config_json);
    auto allowed = kCommonKeys;
    allowed.insert({"queue", "cors_origin"});
    check_keys(cfg, allowed, "config");
    require(cfg.contains("manifest"), "config.manifest is required");
    drivecue::service::ServiceConfig sc;
    sc.manifest_path = cfg.at("manifest").get<std::string>();
    if (cfg.contains("annotations") && !cfg.at("annotations").is_null()) {
      sc.annotations_path = cfg.at("annotations").get<std::string>();
    }
    sc.backend = backend_from(cfg);
    sc.pipeline = pipeline_from(cfg);
    if (cfg.contains("max_in_flight")) {
      sc.max_in_flight = cfg.at("max_in_flight").get<std::size_t>();
      require(sc.max_in_flight >= 1, "max_in_flight must be >= 1");
    }
    sc.queue = cfg.value("queue", false);
    if (cfg.contains("cors_origin")) sc.cors_origin = cfg.at("cors_origin").get<std::string>();
    auto server = std::make_unique<dc_server>();
    server->service = std::make_unique<drivecue::service::Service>(std::move(sc));
    *out = server.release();
  });
}

dc_status dc_server_bind(dc_server* server, const char* host, int port, int* bound_port) {
  return guarded([&] {
    require(server && host, "NULL argument");
    require(port >= 0 && port <= 65535, "port out of range");
    int bound = server->service->bind(host, port);
    if (bound_port) *bound_port = bound;
  });
}

dc_status dc_server_listen(dc_server* server) {
  return guarded([&] {
    require(server != nullptr, "NULL argument");
    server->service->listen_after_bind();
  });
}

void dc_server_wait_ready(dc_server* server) {
  if (server) server->service->wait_until_ready();
}

void dc_server_stop(dc_server* server) {
  if (server) server->service->stop();
}

void dc_server_free(dc_server* server) { delete server; }

dc_status dc_integrate(const double* speeds, const double* curvatures, size_t n, double dt,
                       double* out_xy) {
  return guarded([&] {
    require(n == 0 || (speeds && curvatures && out_xy), "NULL argument");
    drivecue::parser::SpeedCurvatureSequence seq;
    seq.speeds.assign(speeds, speeds + n);
    seq.curvatures.assign(curvatures, curvatures + n);
    auto traj = drivecue::kinematics::integrate(seq, dt);
    for (size_t i = 0; i < traj.points.size(); ++i) {
      out_xy[2 * i] = traj.points[i].x;
      out_xy[2 * i + 1] = traj.points[i].y;
    }
  });
}

dc_status dc_ade(const double* a_xy, const double* b_xy, size_t n, double* out) {
  return guarded([&] {
    require(a_xy && b_xy && out, "NULL argument");
    std::vector<drivecue::Vec2> a(n), b(n);
    for (size_t i = 0; i < n; ++i) {
      a[i] = {a_xy[2 * i], a_xy[2 * i + 1]};
      b[i] = {b_xy[2 * i], b_xy[2 * i + 1]};
    }
    *out = drivecue::metrics::ade(a, b);
  });
}

dc_status dc_parse_trajectory(const char* text, size_t horizon, double* speeds, double* curvatures,
                              int* tier, size_t* clamp_count) {
  return guarded([&] {
    require(text && speeds && curvatures, "NULL argument");
    auto parsed = drivecue::parser::parse_trajectory_text(text, horizon);
    std::copy(parsed.sequence.speeds.begin(), parsed.sequence.speeds.end(), speeds);
    std::copy(parsed.sequence.curvatures.begin(), parsed.sequence.curvatures.end(), curvatures);
    if (tier) *tier = static_cast<int>(parsed.tier);
    if (clamp_count) *clamp_count = parsed.clamp_count;
  });
}

dc_status dc_improvement_percent(double baseline, double value, char* buf, size_t buf_size) {
  return guarded([&] {
    require(buf && buf_size > 0, "NULL argument");
    std::string s = drivecue::report::format_percent(drivecue::report::improvement_percent(baseline, value));
    require(s.size() < buf_size, "buffer too small");
    std::memcpy(buf, s.c_str(), s.size() + 1);
  });
}

}  // extern "C"
