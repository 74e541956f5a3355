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
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "drivecue/geometry.hpp"

namespace drivecue::dataset {

inline constexpr double kDefaultDtSeconds = 0.5;
inline constexpr std::size_t kDefaultHorizon = 10;

struct FrameRef {
  std::string path;
  double t = 0.0;

  friend bool operator==(const FrameRef&, const FrameRef&) = default;
};

struct EgoState {
  double t = 0.0;
  Vec2 position;
  double heading = 0.0;  // radians, (-pi, pi]
  double speed = 0.0;    // m/s, >= 0

  friend bool operator==(const EgoState&, const EgoState&) = default;
};

struct SceneRecord {
  std::string scene_id;
  std::vector<FrameRef> frames;
  std::vector<EgoState> ego_history;
  std::vector<Vec2> ground_truth;
  Bounds bounds;

  friend bool operator==(const SceneRecord&, const SceneRecord&) = default;
};

struct Manifest {
  int version = 1;
  double dt_seconds = kDefaultDtSeconds;
  std::size_t horizon = kDefaultHorizon;
  std::vector<SceneRecord> scenes;
  // Directory relative frame paths resolve against. Not serialized.
  std::filesystem::path base_dir;

  const SceneRecord* find(std::string_view scene_id) const;
};

enum class Referentiality { kNone, kStaticOnly, kDynamicOnly, kStaticDynamic };

struct InstructionAnnotation {
  std::string scene_id;
  std::string annotation_id;
  std::string annotator_id;
  std::string text;
  bool refs_static = false;
  bool refs_dynamic = false;
  bool actionable = false;

  friend bool operator==(const InstructionAnnotation&,
                         const InstructionAnnotation&) = default;
};

// Throws Error{kIo} when the file cannot be read and Error{kSchema} with the
// offending scene_id and field otherwise. Bounds are computed when absent.
Manifest load_scenes(const std::filesystem::path& manifest_path);
Manifest parse_manifest(std::string_view json_text,
                        std::filesystem::path base_dir = {});
std::string serialize_manifest(const Manifest& manifest);

// Smallest rectangle holding every ground-truth and ego-history position.
Bounds compute_bounds(const SceneRecord& scene);

// Accepts CSV (header row required) or a JSON array of objects with the same
// field names. Malformed rows are reported by 1-based row number.
std::vector<InstructionAnnotation> load_annotations(
    const std::filesystem::path& path);
std::vector<InstructionAnnotation> parse_annotations_csv(std::string_view text);
std::vector<InstructionAnnotation> parse_annotations_json(std::string_view text);

std::vector<InstructionAnnotation> filter_actionable(
    const std::vector<InstructionAnnotation>& annotations);

struct ScenePairing {
  const SceneRecord* scene = nullptr;
  std::vector<InstructionAnnotation> annotations;
};

struct JoinResult {
  std::vector<ScenePairing> pairs;  // manifest order
  std::vector<InstructionAnnotation> rejects;
};

// Pointers in the result refer into `scenes`, which must outlive it.
JoinResult join_scene_annotations(
    const std::vector<SceneRecord>& scenes,
    const std::vector<InstructionAnnotation>& annotations);

}  // namespace drivecue::dataset
