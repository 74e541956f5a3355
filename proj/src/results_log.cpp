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

#include "drivecue/results_log.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "drivecue/error.hpp"

namespace drivecue::results {

using nlohmann::ordered_json;
using metrics::ConditionKind;
using metrics::EvaluationRecord;

namespace {

ordered_json points_json(const std::vector<Vec2>& pts) {
  ordered_json a = ordered_json::array();
  for (const auto& p : pts) a.push_back({p.x, p.y});
  return a;
}

std::vector<Vec2> points_from(const ordered_json& a) {
  std::vector<Vec2> out;
  for (const auto& p : a) out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return out;
}

template <typename T>
ordered_json opt(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

}  // namespace

std::string header_to_line(const Header& h) {
  ordered_json j;
  j["type"] = "header";
  j["format"] = kFormatName;
  j["version"] = h.version;
  j["template_version"] = h.template_version;
  j["horizon"] = h.horizon;
  j["dt_seconds"] = h.dt_seconds;
  j["manifest"] = h.manifest;
  j["backend_id"] = h.backend_id;
  return j.dump();
}

std::string record_to_line(const EvaluationRecord& r) {
  ordered_json j;
  j["type"] = "record";
  j["scene_id"] = r.scene_id;
  j["condition"] = metrics::to_string(r.condition);
  j["annotation_id"] = opt(r.annotation_id);
  j["instruction"] = opt(r.instruction_text);
  j["ade"] = opt(r.ade);
  j["out_of_bounds"] = r.out_of_bounds;
  j["parse_tier"] = r.parse_tier;
  j["failure"] = opt(r.failure);
  j["word_count"] = opt(r.word_count);
  j["referentiality"] = r.referentiality ? ordered_json(metrics::to_string(*r.referentiality))
                                         : ordered_json(nullptr);
  j["clamp_count"] = r.clamp_count;
  j["reprompts"] = r.reprompts;
  j["backend_id"] = r.backend_id;
  j["seed"] = opt(r.seed);
  j["speeds"] = r.speeds;
  j["curvatures"] = r.curvatures;
  j["predicted"] = points_json(r.predicted);
  j["ground_truth"] = points_json(r.ground_truth);
  j["bounds"] = {{"min_x", r.bounds.min_x},
                 {"min_y", r.bounds.min_y},
                 {"max_x", r.bounds.max_x},
                 {"max_y", r.bounds.max_y}};
  j["stage_texts"] = r.stage_texts;
  j["meta"] = {{"started_at", r.meta.started_at},
               {"finished_at", r.meta.finished_at},
               {"elapsed_seconds", r.meta.elapsed_seconds}};
  return j.dump();
}

EvaluationRecord record_from_json(std::string_view line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const ordered_json::parse_error& e) {
    throw Error(ErrorCode::kSchema, std::string("results: invalid JSON line: ") + e.what());
  }
  try {
    EvaluationRecord r;
    r.scene_id = j.at("scene_id").get<std::string>();
    auto cond = metrics::condition_from_string(j.at("condition").get<std::string>());
    if (!cond) throw Error(ErrorCode::kSchema, "results: unknown condition");
    r.condition = *cond;
    auto str = [&](const char* k) -> std::optional<std::string> {
      if (!j.contains(k) || j[k].is_null()) return std::nullopt;
      return j[k].get<std::string>();
    };
    r.annotation_id = str("annotation_id");
    r.instruction_text = str("instruction");
    if (j.contains("ade") && !j["ade"].is_null()) r.ade = j["ade"].get<double>();
    r.out_of_bounds = j.value("out_of_bounds", false);
    r.parse_tier = j.value("parse_tier", 0);
    r.failure = str("failure");
    if (j.contains("word_count") && !j["word_count"].is_null()) {
      r.word_count = j["word_count"].get<std::size_t>();
    }
    if (auto ref = str("referentiality")) {
      r.referentiality = metrics::referentiality_from_string(*ref);
      if (!r.referentiality) throw Error(ErrorCode::kSchema, "results: unknown referentiality");
    }
    r.clamp_count = j.value("clamp_count", std::size_t{0});
    r.reprompts = j.value("reprompts", std::size_t{0});
    r.backend_id = j.value("backend_id", std::string());
    if (j.contains("seed") && !j["seed"].is_null()) r.seed = j["seed"].get<std::int64_t>();
    if (j.contains("speeds")) r.speeds = j["speeds"].get<std::vector<double>>();
    if (j.contains("curvatures")) r.curvatures = j["curvatures"].get<std::vector<double>>();
    if (j.contains("predicted")) r.predicted = points_from(j["predicted"]);
    if (j.contains("ground_truth")) r.ground_truth = points_from(j["ground_truth"]);
    if (j.contains("bounds")) {
      const auto& b = j["bounds"];
      r.bounds = {b.at("min_x").get<double>(), b.at("min_y").get<double>(),
                  b.at("max_x").get<double>(), b.at("max_y").get<double>()};
    }
    if (j.contains("stage_texts")) r.stage_texts = j["stage_texts"].get<std::vector<std::string>>();
    if (j.contains("meta") && j["meta"].is_object()) {
      const auto& m = j["meta"];
      r.meta.started_at = m.value("started_at", std::string());
      r.meta.finished_at = m.value("finished_at", std::string());
      r.meta.elapsed_seconds = m.value("elapsed_seconds", 0.0);
    }
    return r;
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("results: malformed record: ") + e.what());
  }
}

std::string strip_metadata(std::string_view line) {
  auto j = ordered_json::parse(line);
  j.erase("meta");
  return j.dump();
}

Log read_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open results log '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string content = ss.str();

  Log log;
  bool have_header = false;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) break;  // torn final line
    std::string_view line(content.data() + pos, nl - pos);
    ++line_no;
    pos = nl + 1;
    log.valid_bytes = pos;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const ordered_json::parse_error&) {
      throw Error(ErrorCode::kSchema,
                  "results: line " + std::to_string(line_no) + " is not valid JSON");
    }
    std::string type = j.value("type", "");
    if (type == "header") {
      if (j.value("format", "") != kFormatName) {
        throw Error(ErrorCode::kSchema, "results: unknown log format");
      }
      log.header.version = j.value("version", 0);
      if (log.header.version != kFormatVersion) {
        throw Error(ErrorCode::kSchema,
                    "results: unsupported version " + std::to_string(log.header.version));
      }
      log.header.template_version = j.value("template_version", "");
      log.header.horizon = j.value("horizon", std::size_t{0});
      log.header.dt_seconds = j.value("dt_seconds", 0.0);
      log.header.manifest = j.value("manifest", "");
      log.header.backend_id = j.value("backend_id", "");
      have_header = true;
    } else if (type == "record") {
      if (!have_header) throw Error(ErrorCode::kSchema, "results: record before header");
      log.records.push_back(record_from_json(line));
    } else {
      throw Error(ErrorCode::kSchema,
                  "results: line " + std::to_string(line_no) + " has unknown type");
    }
  }
  if (!have_header && !content.empty() && log.valid_bytes > 0) {
    throw Error(ErrorCode::kSchema, "results: missing header line");
  }
  return log;
}

std::string triple_key(std::string_view scene_id, ConditionKind condition,
                       std::string_view annotation_id) {
  std::string k(scene_id);
  k += '\x1f';
  k += metrics::to_string(condition);
  k += '\x1f';
  k += annotation_id;
  return k;
}

std::string triple_key(const EvaluationRecord& r) {
  return triple_key(r.scene_id, r.condition, r.annotation_id.value_or(""));
}

}  // namespace drivecue::results
