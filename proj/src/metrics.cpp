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

#include "drivecue/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "drivecue/error.hpp"
#include "text_util.hpp"

namespace drivecue::metrics {

std::string_view to_string(ConditionKind kind) {
  return kind == ConditionKind::kBaseline ? "baseline" : "instructed";
}

std::optional<ConditionKind> condition_from_string(std::string_view s) {
  if (s == "baseline") return ConditionKind::kBaseline;
  if (s == "instructed") return ConditionKind::kInstructed;
  return std::nullopt;
}

std::string_view to_string(Referentiality r) {
  switch (r) {
    case Referentiality::kNone: return "none";
    case Referentiality::kStaticOnly: return "static_only";
    case Referentiality::kDynamicOnly: return "dynamic_only";
    case Referentiality::kStaticDynamic: return "static_dynamic";
  }
  return "none";
}

std::optional<Referentiality> referentiality_from_string(std::string_view s) {
  for (auto r : {Referentiality::kNone, Referentiality::kStaticOnly,
                 Referentiality::kDynamicOnly, Referentiality::kStaticDynamic}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

double ade(std::span<const Vec2> predicted, std::span<const Vec2> ground_truth) {
  if (predicted.size() != ground_truth.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "ade: length mismatch (" + std::to_string(predicted.size()) + " vs " +
                    std::to_string(ground_truth.size()) + ")");
  }
  if (predicted.empty()) throw Error(ErrorCode::kInvalidArgument, "ade: empty trajectory");
  double sum = 0.0;
  for (std::size_t t = 0; t < predicted.size(); ++t) {
    sum += distance(predicted[t], ground_truth[t]);
  }
  return sum / static_cast<double>(predicted.size());
}

bool out_of_bounds(std::span<const Vec2> predicted, const Bounds& bounds, double margin) {
  if (margin < 0.0) throw Error(ErrorCode::kInvalidArgument, "out_of_bounds: margin < 0");
  return std::any_of(predicted.begin(), predicted.end(),
                     [&](const Vec2& p) { return !bounds.contains(p, margin); });
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "quantile of empty set");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0 || hi == lo) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

FilterResult percentile_filter(std::span<const EvaluationRecord> records, double q,
                               ScoreMode mode) {
  if (!(q > 0.0 && q < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "percentile_filter: q must lie in (0, 1)");
  }
  std::map<std::string, std::optional<double>> score;
  for (const auto& r : records) {
    auto& s = score[r.scene_id];
    bool counts = mode == ScoreMode::kPooledMax ||
                  (mode == ScoreMode::kBaselineOnly && r.condition == ConditionKind::kBaseline) ||
                  (mode == ScoreMode::kInstructedOnly && r.condition == ConditionKind::kInstructed);
    if (!counts || !r.ade || !std::isfinite(*r.ade)) continue;
    s = s ? std::max(*s, *r.ade) : *r.ade;
  }
  std::vector<double> finite;
  for (const auto& [id, s] : score) {
    if (s) finite.push_back(*s);
  }
  if (finite.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "percentile_filter: no finite scene scores");
  }
  FilterResult out;
  out.threshold = quantile(std::move(finite), q);
  for (const auto& [id, s] : score) {
    (s && *s > out.threshold ? out.dropped : out.kept).push_back(id);
  }
  return out;
}

SceneAggregate aggregate_scene(std::span<const EvaluationRecord> scene_records) {
  SceneAggregate agg;
  if (!scene_records.empty()) agg.scene_id = scene_records.front().scene_id;
  double sum = 0.0;
  for (const auto& r : scene_records) {
    if (!r.ade || !std::isfinite(*r.ade)) continue;
    if (r.condition == ConditionKind::kBaseline) {
      if (!agg.baseline_ade) agg.baseline_ade = *r.ade;
      continue;
    }
    double v = *r.ade;
    agg.best_ade = agg.best_ade ? std::min(*agg.best_ade, v) : v;
    agg.worst_ade = agg.worst_ade ? std::max(*agg.worst_ade, v) : v;
    sum += v;
    ++agg.instructed_count;
  }
  if (agg.instructed_count > 0) {
    double mean = sum / static_cast<double>(agg.instructed_count);
    // Summation rounding must not push the mean outside [best, worst].
    agg.avg_ade = std::clamp(mean, *agg.best_ade, *agg.worst_ade);
  }
  return agg;
}

std::vector<SceneAggregate> aggregate_all(std::span<const EvaluationRecord> records) {
  std::map<std::string, std::vector<EvaluationRecord>> by_scene;
  for (const auto& r : records) by_scene[r.scene_id].push_back(r);
  std::vector<SceneAggregate> out;
  out.reserve(by_scene.size());
  for (const auto& [id, recs] : by_scene) out.push_back(aggregate_scene(recs));
  return out;
}

std::size_t word_count(std::string_view text) { return text::split_whitespace(text).size(); }

LengthBucket bucket_for_count(std::size_t words) {
  if (words <= 4) return LengthBucket::kUltraShort;
  if (words <= 8) return LengthBucket::kShort;
  if (words <= 12) return LengthBucket::kTypical;
  if (words <= 18) return LengthBucket::kDescriptive;
  return LengthBucket::kLong;
}

LengthBucket length_bucket(std::string_view text) { return bucket_for_count(word_count(text)); }

std::string_view to_string(LengthBucket bucket) {
  switch (bucket) {
    case LengthBucket::kUltraShort: return "Ultra-Short";
    case LengthBucket::kShort: return "Short";
    case LengthBucket::kTypical: return "Typical";
    case LengthBucket::kDescriptive: return "Descriptive";
    case LengthBucket::kLong: return "Long";
  }
  return "";
}

std::string_view word_range(LengthBucket bucket) {
  switch (bucket) {
    case LengthBucket::kUltraShort: return "0-4";
    case LengthBucket::kShort: return "5-8";
    case LengthBucket::kTypical: return "9-12";
    case LengthBucket::kDescriptive: return "13-18";
    case LengthBucket::kLong: return "19+";
  }
  return "";
}

Referentiality referentiality_category(bool refs_static, bool refs_dynamic) {
  if (refs_static && refs_dynamic) return Referentiality::kStaticDynamic;
  if (refs_static) return Referentiality::kStaticOnly;
  if (refs_dynamic) return Referentiality::kDynamicOnly;
  return Referentiality::kNone;
}

}  // namespace drivecue::metrics
