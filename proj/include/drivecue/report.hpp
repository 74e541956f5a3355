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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "drivecue/dataset.hpp"
#include "drivecue/metrics.hpp"
#include "drivecue/results_log.hpp"

namespace drivecue::report {

using metrics::EvaluationRecord;

inline constexpr double kDefaultQ = 0.975;

// Three decimals, round-half-even on the exact binary value.
std::string format_ade(double meters);
std::string format_ade(const std::optional<double>& meters);  // "-" when absent
// One decimal followed by '%'.
std::string format_percent(double percent);

// 100 * (baseline - treated) / baseline. Throws for baseline <= 0.
double improvement_percent(double baseline, double treated);

struct ConditionRow {
  std::optional<double> baseline_avg;
  std::optional<double> instructed_best;
  std::optional<double> instructed_avg;
  std::optional<double> instructed_worst;
  std::size_t scenes = 0;
};

struct ConditionTable {
  double q = kDefaultQ;
  ConditionRow all;
  ConditionRow filtered;
  metrics::FilterResult filter;
};

// Scene aggregates averaged over scenes, before and after the percentile
// filter. Throws when the records hold no finite ADE for a condition.
ConditionTable table_condition_comparison(std::span<const EvaluationRecord> records, double q,
                                          metrics::ScoreMode mode = metrics::ScoreMode::kPooledMax);

struct BucketRow {
  metrics::LengthBucket bucket{};
  double baseline_ade = 0.0;    // over the scenes contributing to the row
  double instructed_ade = 0.0;  // over the row's instructed records
  std::size_t scenes = 0;
  std::size_t records = 0;
};

// Rows for non-empty buckets only, ordered Ultra-Short to Long.
std::vector<BucketRow> table_length_buckets(std::span<const EvaluationRecord> records, double q,
                                            metrics::ScoreMode mode = metrics::ScoreMode::kPooledMax);

struct ReferentialityRow {
  metrics::Referentiality category{};
  double baseline_ade = 0.0;
  double instructed_ade = 0.0;
  std::size_t scenes = 0;
  std::size_t records = 0;
  bool lowest = false;  // lowest instructed ADE among the rows
};

std::vector<ReferentialityRow> table_referentiality(
    std::span<const EvaluationRecord> records, double q,
    metrics::ScoreMode mode = metrics::ScoreMode::kPooledMax);

std::string_view display_name(metrics::Referentiality r);

std::string render_table1_text(const ConditionTable& table);
std::string render_table1_csv(const ConditionTable& table);
std::string render_table2_text(const std::vector<BucketRow>& rows, double q);
std::string render_table2_csv(const std::vector<BucketRow>& rows);
std::string render_table3_text(const std::vector<ReferentialityRow>& rows, double q);
std::string render_table3_csv(const std::vector<ReferentialityRow>& rows);

struct FailureRow {
  metrics::ConditionKind condition{};
  std::size_t records = 0;
  std::size_t failed = 0;
  std::map<std::string, std::size_t> by_kind;  // transport, parse, ...
  std::map<int, std::size_t> tiers;            // 1..3 for successes
  std::size_t clamps = 0;
  std::size_t out_of_bounds = 0;
  std::size_t reprompts = 0;
};

std::vector<FailureRow> table_failures(std::span<const EvaluationRecord> records);
std::string render_failures_text(const std::vector<FailureRow>& rows);
std::string render_failures_csv(const std::vector<FailureRow>& rows);

// Plot-ready document: ground truth, one polyline per successful record,
// bounds, and failure notes.
nlohmann::ordered_json overlay_data(const dataset::SceneRecord& scene,
                                    std::span<const EvaluationRecord> scene_records);

struct ReportSummary {
  std::size_t records = 0;
  std::size_t scenes = 0;
  std::size_t dropped = 0;
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> files;
};

// Writes table1/2/3 and failures as .txt and .csv plus overlays/<scene_id>.json.
ReportSummary write_report(const results::Log& log, double q, const std::filesystem::path& out_dir,
                           metrics::ScoreMode mode = metrics::ScoreMode::kPooledMax);

}  // namespace drivecue::report
