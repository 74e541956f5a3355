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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drivecue/dataset.hpp"
#include "drivecue/geometry.hpp"

namespace drivecue::metrics {

using dataset::Referentiality;

enum class ConditionKind { kBaseline, kInstructed };

std::string_view to_string(ConditionKind kind);
std::optional<ConditionKind> condition_from_string(std::string_view s);
std::string_view to_string(Referentiality r);
std::optional<Referentiality> referentiality_from_string(std::string_view s);

struct RunMetadata {
  std::string started_at;   // ISO-8601 UTC
  std::string finished_at;
  double elapsed_seconds = 0.0;
};

// One (scene, condition, instruction?) run. `ade` is present iff the
// trajectory parsed; `parse_tier` is 0 for failures.
struct EvaluationRecord {
  std::string scene_id;
  ConditionKind condition = ConditionKind::kBaseline;
  std::optional<std::string> annotation_id;
  std::optional<std::string> instruction_text;
  std::optional<double> ade;
  bool out_of_bounds = false;
  int parse_tier = 0;
  std::optional<std::string> failure;  // "transport: ...", "parse: ...", ...
  std::optional<std::size_t> word_count;
  std::optional<Referentiality> referentiality;
  std::size_t clamp_count = 0;
  std::size_t reprompts = 0;
  std::string backend_id;
  std::optional<std::int64_t> seed;
  std::vector<double> speeds;
  std::vector<double> curvatures;
  std::vector<Vec2> predicted;      // global frame
  std::vector<Vec2> ground_truth;   // copied so a log is self-contained
  Bounds bounds;
  std::vector<std::string> stage_texts;  // raw model output per stage
  RunMetadata meta;                 // excluded from reproducibility checks

  bool failed() const { return !ade.has_value(); }
};

struct SceneAggregate {
  std::string scene_id;
  std::optional<double> baseline_ade;
  std::optional<double> best_ade;
  std::optional<double> avg_ade;
  std::optional<double> worst_ade;
  std::size_t instructed_count = 0;  // finite instructed ADEs
};

// Mean Euclidean distance over corresponding points. Throws on length
// mismatch or empty input.
double ade(std::span<const Vec2> predicted, std::span<const Vec2> ground_truth);

// True iff any point lies outside `bounds` grown by `margin` on every side.
bool out_of_bounds(std::span<const Vec2> predicted, const Bounds& bounds, double margin);

inline constexpr double kDefaultOobMargin = 30.0;

// Which conditions define a scene's outlier score.
enum class ScoreMode { kPooledMax, kBaselineOnly, kInstructedOnly };

struct FilterResult {
  std::vector<std::string> kept;     // sorted
  std::vector<std::string> dropped;  // sorted
  double threshold = 0.0;
};

// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

// Scene score = max finite ADE over the selected conditions. Scenes scoring
// above the q-quantile are dropped; scenes without a finite score are kept.
FilterResult percentile_filter(std::span<const EvaluationRecord> records, double q,
                               ScoreMode mode = ScoreMode::kPooledMax);

SceneAggregate aggregate_scene(std::span<const EvaluationRecord> scene_records);

// Aggregates for every scene present in `records`, sorted by scene_id.
std::vector<SceneAggregate> aggregate_all(std::span<const EvaluationRecord> records);

enum class LengthBucket { kUltraShort, kShort, kTypical, kDescriptive, kLong };

inline constexpr LengthBucket kAllBuckets[] = {
    LengthBucket::kUltraShort, LengthBucket::kShort, LengthBucket::kTypical,
    LengthBucket::kDescriptive, LengthBucket::kLong};

std::size_t word_count(std::string_view text);
LengthBucket bucket_for_count(std::size_t words);
LengthBucket length_bucket(std::string_view text);
std::string_view to_string(LengthBucket bucket);
std::string_view word_range(LengthBucket bucket);

Referentiality referentiality_category(bool refs_static, bool refs_dynamic);

}  // namespace drivecue::metrics
