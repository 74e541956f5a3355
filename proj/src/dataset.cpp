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

#include "drivecue/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "drivecue/error.hpp"
#include "text_util.hpp"

namespace drivecue::dataset {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& scene_id,
                               const std::string& field,
                               const std::string& what) {
  std::string where = scene_id.empty() ? std::string("manifest")
                                       : "scene '" + scene_id + "'";
  throw Error(ErrorCode::kSchema, where + ": field '" + field + "': " + what);
}

double number_field(const json& obj, const char* key,
                    const std::string& scene_id, const std::string& field) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    schema_error(scene_id, field + "." + key, "missing or not a number");
  }
  double v = it->get<double>();
  if (!std::isfinite(v)) schema_error(scene_id, field + "." + key, "not finite");
  return v;
}

Vec2 point_from(const json& j, const std::string& scene_id,
                const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() ||
      !j[1].is_number()) {
    schema_error(scene_id, field, "expected [x, y]");
  }
  Vec2 p{j[0].get<double>(), j[1].get<double>()};
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    schema_error(scene_id, field, "not finite");
  }
  return p;
}

SceneRecord parse_scene(const json& js, std::size_t index,
                        std::size_t horizon) {
  if (!js.is_object()) {
    schema_error("", "scenes[" + std::to_string(index) + "]",
                 "expected an object");
  }
  SceneRecord scene;
  auto id = js.find("scene_id");
  if (id == js.end() || !id->is_string() || id->get<std::string>().empty()) {
    schema_error("", "scenes[" + std::to_string(index) + "].scene_id",
                 "missing or empty");
  }
  scene.scene_id = id->get<std::string>();
  const std::string& sid = scene.scene_id;

  const json frames = js.value("frames", json::array());
  if (!frames.is_array()) schema_error(sid, "frames", "expected an array");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    std::string field = "frames[" + std::to_string(i) + "]";
    if (!f.is_object() || !f.contains("path") || !f["path"].is_string()) {
      schema_error(sid, field + ".path", "missing or not a string");
    }
    scene.frames.push_back({f["path"].get<std::string>(),
                            number_field(f, "t", sid, field)});
    if (i > 0 && !(scene.frames[i].t > scene.frames[i - 1].t)) {
      schema_error(sid, field + ".t", "frame timestamps must be strictly increasing");
    }
  }

  auto hist = js.find("ego_history");
  if (hist == js.end() || !hist->is_array() || hist->empty()) {
    schema_error(sid, "ego_history", "missing or empty");
  }
  for (std::size_t i = 0; i < hist->size(); ++i) {
    const auto& e = (*hist)[i];
    std::string field = "ego_history[" + std::to_string(i) + "]";
    if (!e.is_object()) schema_error(sid, field, "expected an object");
    EgoState s;
    s.t = number_field(e, "t", sid, field);
    s.position = {number_field(e, "x", sid, field),
                  number_field(e, "y", sid, field)};
    s.heading = normalize_angle(number_field(e, "heading", sid, field));
    s.speed = number_field(e, "speed", sid, field);
    if (s.speed < 0.0) schema_error(sid, field + ".speed", "must be >= 0");
    if (i > 0 && !(s.t > scene.ego_history.back().t)) {
      schema_error(sid, field + ".t",
                   "ego_history timestamps must be strictly increasing");
    }
    scene.ego_history.push_back(s);
  }

  auto gt = js.find("ground_truth");
  if (gt == js.end() || !gt->is_array()) {
    schema_error(sid, "ground_truth", "missing or not an array");
  }
  if (gt->size() != horizon) {
    schema_error(sid, "ground_truth",
                 "expected " + std::to_string(horizon) + " points, got " +
                     std::to_string(gt->size()));
  }
  for (std::size_t i = 0; i < gt->size(); ++i) {
    scene.ground_truth.push_back(
        point_from((*gt)[i], sid, "ground_truth[" + std::to_string(i) + "]"));
  }

  auto b = js.find("bounds");
  if (b != js.end() && !b->is_null()) {
    if (!b->is_object()) schema_error(sid, "bounds", "expected an object");
    scene.bounds = {number_field(*b, "min_x", sid, "bounds"),
                    number_field(*b, "min_y", sid, "bounds"),
                    number_field(*b, "max_x", sid, "bounds"),
                    number_field(*b, "max_y", sid, "bounds")};
    if (scene.bounds.min_x > scene.bounds.max_x ||
        scene.bounds.min_y > scene.bounds.max_y) {
      schema_error(sid, "bounds", "min exceeds max");
    }
    for (const auto& p : scene.ground_truth) {
      if (!scene.bounds.contains(p)) {
        schema_error(sid, "bounds", "does not contain every ground_truth point");
      }
    }
    for (const auto& s : scene.ego_history) {
      if (!scene.bounds.contains(s.position)) {
        schema_error(sid, "bounds", "does not contain every ego_history position");
      }
    }
  } else {
    scene.bounds = compute_bounds(scene);
  }
  return scene;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

const SceneRecord* Manifest::find(std::string_view scene_id) const {
  auto it = std::find_if(scenes.begin(), scenes.end(), [&](const auto& s) {
    return s.scene_id == scene_id;
  });
  return it == scenes.end() ? nullptr : &*it;
}

Bounds compute_bounds(const SceneRecord& scene) {
  Vec2 first = !scene.ground_truth.empty() ? scene.ground_truth.front()
               : !scene.ego_history.empty() ? scene.ego_history.front().position
                                            : Vec2{};
  Bounds b{first.x, first.y, first.x, first.y};
  for (const auto& p : scene.ground_truth) b.expand_to(p);
  for (const auto& s : scene.ego_history) b.expand_to(s.position);
  return b;
}

Manifest parse_manifest(std::string_view json_text,
                        std::filesystem::path base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kSchema,
                std::string("manifest: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) schema_error("", "(root)", "expected an object");

  Manifest m;
  m.base_dir = std::move(base_dir);
  const json header = doc.value("header", json::object());
  if (!header.is_object()) schema_error("", "header", "expected an object");
  if (header.contains("version")) {
    if (!header["version"].is_number_integer()) {
      schema_error("", "header.version", "expected an integer");
    }
    m.version = header["version"].get<int>();
  }
  if (header.contains("dt_seconds")) {
    m.dt_seconds = number_field(header, "dt_seconds", "", "header");
    if (!(m.dt_seconds > 0.0)) schema_error("", "header.dt_seconds", "must be > 0");
  }
  if (header.contains("horizon")) {
    if (!header["horizon"].is_number_integer() ||
        header["horizon"].get<long long>() < 1) {
      schema_error("", "header.horizon", "expected a positive integer");
    }
    m.horizon = header["horizon"].get<std::size_t>();
  }

  auto scenes = doc.find("scenes");
  if (scenes == doc.end() || !scenes->is_array()) {
    schema_error("", "scenes", "missing or not an array");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < scenes->size(); ++i) {
    SceneRecord s = parse_scene((*scenes)[i], i, m.horizon);
    if (!seen.insert(s.scene_id).second) {
      schema_error(s.scene_id, "scene_id", "duplicate scene_id");
    }
    m.scenes.push_back(std::move(s));
  }
  return m;
}

Manifest load_scenes(const std::filesystem::path& manifest_path) {
  std::string text = read_file(manifest_path);
  return parse_manifest(text, manifest_path.parent_path());
}

std::string serialize_manifest(const Manifest& m) {
  json doc;
  doc["header"] = {{"version", m.version},
                   {"dt_seconds", m.dt_seconds},
                   {"horizon", m.horizon}};
  json scenes = json::array();
  for (const auto& s : m.scenes) {
    json js;
    js["scene_id"] = s.scene_id;
    js["frames"] = json::array();
    for (const auto& f : s.frames) js["frames"].push_back({{"path", f.path}, {"t", f.t}});
    js["ego_history"] = json::array();
    for (const auto& e : s.ego_history) {
      js["ego_history"].push_back({{"t", e.t},
                                   {"x", e.position.x},
                                   {"y", e.position.y},
                                   {"heading", e.heading},
                                   {"speed", e.speed}});
    }
    js["ground_truth"] = json::array();
    for (const auto& p : s.ground_truth) js["ground_truth"].push_back({p.x, p.y});
    js["bounds"] = {{"min_x", s.bounds.min_x},
                    {"min_y", s.bounds.min_y},
                    {"max_x", s.bounds.max_x},
                    {"max_y", s.bounds.max_y}};
    scenes.push_back(std::move(js));
  }
  doc["scenes"] = std::move(scenes);
  return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Annotations

namespace {

const char* const kColumns[] = {"scene_id",    "annotation_id", "annotator_id",
                                "text",        "refs_static",   "refs_dynamic",
                                "actionable"};

[[noreturn]] void row_error(std::size_t row, const std::string& what) {
  throw Error(ErrorCode::kSchema,
              "annotations: row " + std::to_string(row) + ": " + what);
}

std::optional<bool> parse_flag(std::string_view raw, std::size_t row,
                               const char* column) {
  std::string v = text::to_lower(text::trim(raw));
  if (v.empty()) return std::nullopt;
  if (v == "true" || v == "1" || v == "yes" || v == "y" || v == "t") return true;
  if (v == "false" || v == "0" || v == "no" || v == "n" || v == "f") return false;
  row_error(row, std::string("column '") + column + "': not a boolean: '" +
                     std::string(raw) + "'");
}

// Raw field values keyed by column; absent optional columns are nullopt.
struct RawRow {
  std::size_t row = 0;
  std::string scene_id;
  std::string annotation_id;
  std::string annotator_id;
  std::string text;
  std::optional<bool> refs_static;
  std::optional<bool> refs_dynamic;
  std::optional<bool> actionable;
};

InstructionAnnotation finish_row(const RawRow& r) {
  if (text::trim(r.scene_id).empty()) row_error(r.row, "empty scene_id");
  if (text::trim(r.annotation_id).empty()) row_error(r.row, "empty annotation_id");
  InstructionAnnotation a;
  a.scene_id = std::string(text::trim(r.scene_id));
  a.annotation_id = std::string(text::trim(r.annotation_id));
  a.annotator_id = std::string(text::trim(r.annotator_id));
  a.text = r.text;
  a.refs_static = r.refs_static.value_or(false);
  a.refs_dynamic = r.refs_dynamic.value_or(false);
  bool has_text = !text::trim(a.text).empty();
  a.actionable = r.actionable.value_or(has_text);
  if (a.actionable && !has_text) {
    row_error(r.row, "actionable annotation with empty text");
  }
  return a;
}

std::vector<InstructionAnnotation> finish_all(const std::vector<RawRow>& rows) {
  std::vector<InstructionAnnotation> out;
  out.reserve(rows.size());
  std::unordered_map<std::string, std::size_t> ids;
  for (const auto& r : rows) {
    InstructionAnnotation a = finish_row(r);
    auto [it, inserted] = ids.emplace(a.annotation_id, r.row);
    if (!inserted) {
      row_error(r.row, "duplicate annotation_id '" + a.annotation_id +
                           "' (first seen in row " + std::to_string(it->second) + ")");
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace

std::vector<InstructionAnnotation> parse_annotations_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> record_lines;
  try {
    text::parse_csv(text, records, record_lines);
  } catch (const std::runtime_error& e) {
    throw Error(ErrorCode::kSchema, std::string("annotations: ") + e.what());
  }
  if (records.empty()) throw Error(ErrorCode::kSchema, "annotations: missing header row");

  const auto& header = records.front();
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string name = text::to_lower(text::trim(header[i]));
    if (i == 0 && name.starts_with("\xEF\xBB\xBF")) name.erase(0, 3);
    col[name] = i;
  }
  for (int required = 0; required < 4; ++required) {
    if (!col.contains(kColumns[required])) {
      throw Error(ErrorCode::kSchema, std::string("annotations: header lacks column '") +
                                          kColumns[required] + "'");
    }
  }

  std::vector<RawRow> rows;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& fields = records[r];
    if (fields.size() == 1 && text::trim(fields[0]).empty()) continue;  // blank line
    std::size_t row_no = r;  // data rows numbered from 1
    if (fields.size() != header.size()) {
      row_error(row_no, "expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(fields.size()) +
                            " (line " + std::to_string(record_lines[r]) + ")");
    }
    auto get = [&](const char* name) -> std::optional<std::string_view> {
      auto it = col.find(name);
      if (it == col.end()) return std::nullopt;
      return std::string_view(fields[it->second]);
    };
    RawRow raw;
    raw.row = row_no;
    raw.scene_id = *get("scene_id");
    raw.annotation_id = *get("annotation_id");
    raw.annotator_id = *get("annotator_id");
    raw.text = *get("text");
    if (auto v = get("refs_static")) raw.refs_static = parse_flag(*v, row_no, "refs_static");
    if (auto v = get("refs_dynamic")) raw.refs_dynamic = parse_flag(*v, row_no, "refs_dynamic");
    if (auto v = get("actionable")) raw.actionable = parse_flag(*v, row_no, "actionable");
    rows.push_back(std::move(raw));
  }
  return finish_all(rows);
}

std::vector<InstructionAnnotation> parse_annotations_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kSchema, std::string("annotations: invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::kSchema, "annotations: expected a JSON array");

  std::vector<RawRow> rows;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& o = doc[i];
    std::size_t row_no = i + 1;
    if (!o.is_object()) row_error(row_no, "expected an object");
    RawRow raw;
    raw.row = row_no;
    auto str = [&](const char* key, bool required) -> std::string {
      auto it = o.find(key);
      if (it == o.end() || it->is_null()) {
        if (required) row_error(row_no, std::string("missing '") + key + "'");
        return {};
      }
      if (it->is_string()) return it->get<std::string>();
      if (it->is_number_integer()) return std::to_string(it->get<long long>());
      row_error(row_no, std::string("'") + key + "' is not a string");
    };
    auto flag = [&](const char* key) -> std::optional<bool> {
      auto it = o.find(key);
      if (it == o.end() || it->is_null()) return std::nullopt;
      if (it->is_boolean()) return it->get<bool>();
      if (it->is_number_integer()) return it->get<long long>() != 0;
      if (it->is_string()) return parse_flag(it->get<std::string>(), row_no, key);
      row_error(row_no, std::string("'") + key + "' is not a boolean");
    };
    raw.scene_id = str("scene_id", true);
    raw.annotation_id = str("annotation_id", true);
    raw.annotator_id = str("annotator_id", false);
    raw.text = str("text", false);
    raw.refs_static = flag("refs_static");
    raw.refs_dynamic = flag("refs_dynamic");
    raw.actionable = flag("actionable");
    rows.push_back(std::move(raw));
  }
  return finish_all(rows);
}

std::vector<InstructionAnnotation> load_annotations(
    const std::filesystem::path& path) {
  std::string content = read_file(path);
  auto first = std::find_if_not(content.begin(), content.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
  bool looks_json = path.extension() == ".json" ||
                    (first != content.end() && *first == '[');
  return looks_json ? parse_annotations_json(content)
                    : parse_annotations_csv(content);
}

std::vector<InstructionAnnotation> filter_actionable(
    const std::vector<InstructionAnnotation>& annotations) {
  std::vector<InstructionAnnotation> out;
  std::copy_if(annotations.begin(), annotations.end(), std::back_inserter(out),
               [](const auto& a) { return a.actionable; });
  return out;
}

JoinResult join_scene_annotations(
    const std::vector<SceneRecord>& scenes,
    const std::vector<InstructionAnnotation>& annotations) {
  JoinResult result;
  std::unordered_map<std::string, std::size_t> index;
  result.pairs.reserve(scenes.size());
  for (const auto& s : scenes) {
    index.emplace(s.scene_id, result.pairs.size());
    result.pairs.push_back({&s, {}});
  }
  for (const auto& a : annotations) {
    auto it = index.find(a.scene_id);
    if (it == index.end()) {
      result.rejects.push_back(a);
    } else {
      result.pairs[it->second].annotations.push_back(a);
    }
  }
  return result;
}

}  // namespace drivecue::dataset
