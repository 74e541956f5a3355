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

#include "drivecue/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "drivecue/error.hpp"
#include "text_util.hpp"

namespace drivecue::report {

using metrics::ConditionKind;
using metrics::LengthBucket;
using metrics::Referentiality;
using nlohmann::ordered_json;

namespace {

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string q_label(double q) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", q * 100.0);
  return std::string("Q") + buf;
}

bool finite_ade(const EvaluationRecord& r) { return r.ade && std::isfinite(*r.ade); }

struct Mean {
  double sum = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  std::optional<double> value() const {
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  }
};

ConditionRow row_over(const std::vector<metrics::SceneAggregate>& aggs,
                      const std::set<std::string>* keep) {
  Mean base, best, avg, worst;
  std::size_t scenes = 0;
  for (const auto& a : aggs) {
    if (keep && !keep->contains(a.scene_id)) continue;
    ++scenes;
    if (a.baseline_ade) base.add(*a.baseline_ade);
    if (a.instructed_count > 0) {
      best.add(*a.best_ade);
      avg.add(*a.avg_ade);
      worst.add(*a.worst_ade);
    }
  }
  return {base.value(), best.value(), avg.value(), worst.value(), scenes};
}

// Baseline ADE per scene (first finite baseline record) for the kept scenes.
std::map<std::string, double> kept_baselines(std::span<const EvaluationRecord> records,
                                             const std::set<std::string>& keep) {
  std::map<std::string, double> out;
  for (const auto& r : records) {
    if (r.condition == ConditionKind::kBaseline && finite_ade(r) && keep.contains(r.scene_id)) {
      out.emplace(r.scene_id, *r.ade);
    }
  }
  return out;
}

template <typename Key>
struct Group {
  Mean instructed;
  std::set<std::string> scenes;
};

// Shared by the length and referentiality tables: instructed mean over the
// group's records, baseline mean over the group's scenes.
template <typename Key, typename KeyFn>
std::map<Key, std::pair<Group<Key>, Mean>> group_rows(std::span<const EvaluationRecord> records,
                                                      double q, metrics::ScoreMode mode,
                                                      KeyFn key_of) {
  metrics::FilterResult filter = metrics::percentile_filter(records, q, mode);
  std::set<std::string> keep(filter.kept.begin(), filter.kept.end());
  auto baselines = kept_baselines(records, keep);
  std::map<Key, std::pair<Group<Key>, Mean>> groups;
  for (const auto& r : records) {
    if (r.condition != ConditionKind::kInstructed || !finite_ade(r) || !keep.contains(r.scene_id)) {
      continue;
    }
    std::optional<Key> key = key_of(r);
    if (!key) continue;
    auto& g = groups[*key].first;
    g.instructed.add(*r.ade);
    g.scenes.insert(r.scene_id);
  }
  for (auto& [key, entry] : groups) {
    for (const auto& s : entry.first.scenes) {
      if (auto it = baselines.find(s); it != baselines.end()) entry.second.add(it->second);
    }
  }
  return groups;
}

std::string failure_kind(const EvaluationRecord& r) {
  if (!r.failure) return "unknown";
  std::size_t colon = r.failure->find(':');
  return colon == std::string::npos ? *r.failure : r.failure->substr(0, colon);
}

void write_file(const std::filesystem::path& path, const std::string& content,
                ReportSummary& summary) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << content;
  summary.files.push_back(path);
}

std::string safe_file_name(const std::string& id) {
  std::string out;
  for (char c : id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

}  // namespace

std::string format_ade(double meters) { return text::format_fixed(meters, 3); }

std::string format_ade(const std::optional<double>& meters) {
  return meters ? format_ade(*meters) : std::string("-");
}

std::string format_percent(double percent) { return text::format_fixed(percent, 1) + "%"; }

double improvement_percent(double baseline, double treated) {
  if (!(baseline > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "improvement_percent: baseline must be positive");
  }
  return 100.0 * (baseline - treated) / baseline;
}

ConditionTable table_condition_comparison(std::span<const EvaluationRecord> records, double q,
                                          metrics::ScoreMode mode) {
  if (records.empty()) throw Error(ErrorCode::kInvalidArgument, "no records to tabulate");
  bool any_baseline = false;
  bool any_instructed = false;
  for (const auto& r : records) {
    if (!finite_ade(r)) continue;
    (r.condition == ConditionKind::kBaseline ? any_baseline : any_instructed) = true;
  }
  if (!any_baseline) {
    throw Error(ErrorCode::kInvalidArgument, "no finite ADE for the baseline condition");
  }
  if (!any_instructed) {
    throw Error(ErrorCode::kInvalidArgument, "no finite ADE for the instructed condition");
  }
  ConditionTable t;
  t.q = q;
  auto aggs = metrics::aggregate_all(records);
  t.all = row_over(aggs, nullptr);
  t.filter = metrics::percentile_filter(records, q, mode);
  std::set<std::string> keep(t.filter.kept.begin(), t.filter.kept.end());
  t.filtered = row_over(aggs, &keep);
  return t;
}

std::vector<BucketRow> table_length_buckets(std::span<const EvaluationRecord> records, double q,
                                            metrics::ScoreMode mode) {
  auto groups = group_rows<LengthBucket>(records, q, mode, [](const EvaluationRecord& r) {
    std::size_t words = r.word_count ? *r.word_count
                                     : metrics::word_count(r.instruction_text.value_or(""));
    return std::optional<LengthBucket>(metrics::bucket_for_count(words));
  });
  std::vector<BucketRow> rows;
  for (LengthBucket b : metrics::kAllBuckets) {
    auto it = groups.find(b);
    if (it == groups.end()) continue;
    const auto& [g, base] = it->second;
    rows.push_back({b, base.value().value_or(std::nan("")), *g.instructed.value(),
                    g.scenes.size(), g.instructed.n});
  }
  return rows;
}

std::vector<ReferentialityRow> table_referentiality(std::span<const EvaluationRecord> records,
                                                    double q, metrics::ScoreMode mode) {
  auto groups = group_rows<Referentiality>(
      records, q, mode, [](const EvaluationRecord& r) { return r.referentiality; });
  std::vector<ReferentialityRow> rows;
  for (Referentiality c : {Referentiality::kNone, Referentiality::kStaticOnly,
                           Referentiality::kDynamicOnly, Referentiality::kStaticDynamic}) {
    auto it = groups.find(c);
    if (it == groups.end()) continue;
    const auto& [g, base] = it->second;
    rows.push_back({c, base.value().value_or(std::nan("")), *g.instructed.value(),
                    g.scenes.size(), g.instructed.n, false});
  }
  if (!rows.empty()) {
    auto lowest = std::min_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      return a.instructed_ade < b.instructed_ade;
    });
    lowest->lowest = true;
  }
  return rows;
}

std::string_view display_name(Referentiality r) {
  switch (r) {
    case Referentiality::kNone: return "None (Non-ref)";
    case Referentiality::kStaticOnly: return "Static Only";
    case Referentiality::kDynamicOnly: return "Dynamic Only";
    case Referentiality::kStaticDynamic: return "Static + Dynamic";
  }
  return "";
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string ade_or_dash(double v) { return std::isfinite(v) ? format_ade(v) : std::string("-"); }

std::string improvement_cell(const std::optional<double>& base, const std::optional<double>& v) {
  if (!base || !v || !(*base > 0.0)) return "-";
  return format_percent(improvement_percent(*base, *v));
}

}  // namespace

std::string render_table1_text(const ConditionTable& t) {
  const std::string ql = q_label(t.q);
  std::string s = "ADE comparison: baseline vs instruction-conditioned runs\n";
  s += pad("", 16) + pad("No Instr.", 11) + "Instructed\n";
  s += pad("", 16) + pad("Avg ADE", 11) + pad("Best ADE", 11) + pad("Avg ADE", 11) + "Worst ADE\n";
  auto row = [&](const std::string& label, const ConditionRow& r) {
    return pad(label, 16) + pad(format_ade(r.baseline_avg), 11) +
           pad(format_ade(r.instructed_best), 11) + pad(format_ade(r.instructed_avg), 11) +
           format_ade(r.instructed_worst) + "\n";
  };
  s += row("Mean (All)", t.all);
  s += row("Mean (" + ql + ")", t.filtered);
  s += "\nImprovement over No Instr.\n";
  s += pad("", 16) + pad("Best ADE", 11) + pad("Avg ADE", 11) + "Worst ADE\n";
  auto imp = [&](const std::string& label, const ConditionRow& r) {
    return pad(label, 16) + pad(improvement_cell(r.baseline_avg, r.instructed_best), 11) +
           pad(improvement_cell(r.baseline_avg, r.instructed_avg), 11) +
           improvement_cell(r.baseline_avg, r.instructed_worst) + "\n";
  };
  s += imp("Mean (All)", t.all);
  s += imp("Mean (" + ql + ")", t.filtered);
  s += "\nScenes: " + std::to_string(t.all.scenes) + " total, " +
       std::to_string(t.filter.dropped.size()) + " dropped by the " + ql +
       " filter (threshold " + format_ade(t.filter.threshold) + ")\n";
  return s;
}

std::string render_table1_csv(const ConditionTable& t) {
  std::string s =
      "row,scenes,baseline_avg_ade,instructed_best_ade,instructed_avg_ade,instructed_worst_ade\n";
  auto row = [&](const std::string& label, const ConditionRow& r) {
    auto cell = [](const std::optional<double>& v) { return v ? format_ade(*v) : std::string(); };
    return label + "," + std::to_string(r.scenes) + "," + cell(r.baseline_avg) + "," +
           cell(r.instructed_best) + "," + cell(r.instructed_avg) + "," +
           cell(r.instructed_worst) + "\n";
  };
  s += row("Mean (All)", t.all);
  s += row("Mean (" + q_label(t.q) + ")", t.filtered);
  return s;
}

std::string render_table2_text(const std::vector<BucketRow>& rows, double q) {
  const std::string ql = q_label(q);
  std::string s = "Average ADE by instruction length bucket (" + ql + ")\n";
  s += pad("Bucket", 13) + pad("Words", 7) + pad("No Instr.", 11) + pad("Instructed", 12) +
       pad("Scenes", 8) + "Records\n";
  for (const auto& r : rows) {
    s += pad(std::string(metrics::to_string(r.bucket)), 13) +
         pad(std::string(metrics::word_range(r.bucket)), 7) + pad(ade_or_dash(r.baseline_ade), 11) +
         pad(format_ade(r.instructed_ade), 12) + pad(std::to_string(r.scenes), 8) +
         std::to_string(r.records) + "\n";
  }
  return s;
}

std::string render_table2_csv(const std::vector<BucketRow>& rows) {
  std::string s = "bucket,word_range,baseline_ade,instructed_ade,scenes,records\n";
  for (const auto& r : rows) {
    s += std::string(metrics::to_string(r.bucket)) + "," +
         std::string(metrics::word_range(r.bucket)) + "," +
         (std::isfinite(r.baseline_ade) ? format_ade(r.baseline_ade) : "") + "," +
         format_ade(r.instructed_ade) + "," + std::to_string(r.scenes) + "," +
         std::to_string(r.records) + "\n";
  }
  return s;
}

std::string render_table3_text(const std::vector<ReferentialityRow>& rows, double q) {
  const std::string ql = q_label(q);
  std::string s = "ADE by referentiality category (" + ql + ")\n";
  s += pad("Referentiality", 18) + pad("No Instr.", 11) + pad("Instructed", 12) +
       pad("Scenes", 8) + "Records\n";
  for (const auto& r : rows) {
    s += pad(std::string(display_name(r.category)), 18) + pad(ade_or_dash(r.baseline_ade), 11) +
         pad(format_ade(r.instructed_ade) + (r.lowest ? " *" : ""), 12) +
         pad(std::to_string(r.scenes), 8) + std::to_string(r.records) + "\n";
  }
  if (!rows.empty()) s += "\n* lowest instructed ADE\n";
  return s;
}

std::string render_table3_csv(const std::vector<ReferentialityRow>& rows) {
  std::string s = "referentiality,baseline_ade,instructed_ade,scenes,records,lowest\n";
  for (const auto& r : rows) {
    s += std::string(display_name(r.category)) + "," +
         (std::isfinite(r.baseline_ade) ? format_ade(r.baseline_ade) : "") + "," +
         format_ade(r.instructed_ade) + "," + std::to_string(r.scenes) + "," +
         std::to_string(r.records) + "," + (r.lowest ? "1" : "0") + "\n";
  }
  return s;
}

std::vector<FailureRow> table_failures(std::span<const EvaluationRecord> records) {
  std::vector<FailureRow> rows(2);
  rows[0].condition = ConditionKind::kBaseline;
  rows[1].condition = ConditionKind::kInstructed;
  for (const auto& r : records) {
    FailureRow& row = rows[r.condition == ConditionKind::kBaseline ? 0 : 1];
    ++row.records;
    row.clamps += r.clamp_count;
    row.reprompts += r.reprompts;
    if (r.out_of_bounds) ++row.out_of_bounds;
    if (r.failed()) {
      ++row.failed;
      ++row.by_kind[failure_kind(r)];
    } else {
      ++row.tiers[r.parse_tier];
    }
  }
  return rows;
}

std::string render_failures_text(const std::vector<FailureRow>& rows) {
  std::string s = "Failures and parse statistics\n";
  s += pad("Condition", 12) + pad("Records", 9) + pad("Failed", 8) + pad("Rate", 8) +
       pad("Tier1", 7) + pad("Tier2", 7) + pad("Tier3", 7) + pad("Clamps", 8) +
       pad("OOB", 6) + "Reprompts\n";
  for (const auto& r : rows) {
    std::string rate = r.records ? format_percent(100.0 * static_cast<double>(r.failed) /
                                                  static_cast<double>(r.records))
                                 : "-";
    auto tier = [&](int t) {
      auto it = r.tiers.find(t);
      return std::to_string(it == r.tiers.end() ? 0 : it->second);
    };
    s += pad(std::string(metrics::to_string(r.condition)), 12) + pad(std::to_string(r.records), 9) +
         pad(std::to_string(r.failed), 8) + pad(rate, 8) + pad(tier(1), 7) + pad(tier(2), 7) +
         pad(tier(3), 7) + pad(std::to_string(r.clamps), 8) + pad(std::to_string(r.out_of_bounds), 6) +
         std::to_string(r.reprompts) + "\n";
  }
  bool any = false;
  for (const auto& r : rows) {
    for (const auto& [kind, n] : r.by_kind) {
      if (!any) s += "\nFailure kinds\n";
      any = true;
      s += pad(std::string(metrics::to_string(r.condition)), 12) + pad(kind, 12) +
           std::to_string(n) + "\n";
    }
  }
  return s;
}

std::string render_failures_csv(const std::vector<FailureRow>& rows) {
  std::set<std::string> kinds;
  for (const auto& r : rows) {
    for (const auto& [k, n] : r.by_kind) kinds.insert(k);
  }
  std::string s = "condition,records,failed,tier1,tier2,tier3,clamps,out_of_bounds,reprompts";
  for (const auto& k : kinds) s += ",failed_" + k;
  s += "\n";
  for (const auto& r : rows) {
    auto tier = [&](int t) {
      auto it = r.tiers.find(t);
      return std::to_string(it == r.tiers.end() ? 0 : it->second);
    };
    s += std::string(metrics::to_string(r.condition)) + "," + std::to_string(r.records) + "," +
         std::to_string(r.failed) + "," + tier(1) + "," + tier(2) + "," + tier(3) + "," +
         std::to_string(r.clamps) + "," + std::to_string(r.out_of_bounds) + "," +
         std::to_string(r.reprompts);
    for (const auto& k : kinds) {
      auto it = r.by_kind.find(k);
      s += "," + std::to_string(it == r.by_kind.end() ? 0 : it->second);
    }
    s += "\n";
  }
  return s;
}

// ---------------------------------------------------------------------------

ordered_json overlay_data(const dataset::SceneRecord& scene,
                          std::span<const EvaluationRecord> scene_records) {
  auto pts = [](const std::vector<Vec2>& v) {
    ordered_json a = ordered_json::array();
    for (const auto& p : v) a.push_back({p.x, p.y});
    return a;
  };
  auto bounds_json = [](const Bounds& b) {
    return ordered_json{{"min_x", b.min_x}, {"min_y", b.min_y}, {"max_x", b.max_x}, {"max_y", b.max_y}};
  };

  ordered_json doc;
  doc["scene_id"] = scene.scene_id;
  doc["bounds"] = bounds_json(scene.bounds);
  Bounds view = scene.bounds;
  ordered_json polylines = ordered_json::array();
  polylines.push_back({{"kind", "ground_truth"}, {"label", "ground truth"}, {"points", pts(scene.ground_truth)}});
  ordered_json failures = ordered_json::array();
  bool zoom_out = false;
  for (const auto& r : scene_records) {
    std::string kind(metrics::to_string(r.condition));
    std::string label = r.condition == ConditionKind::kBaseline
                            ? std::string("no instruction")
                            : r.instruction_text.value_or("instructed");
    if (r.failed()) {
      failures.push_back({{"kind", kind},
                          {"annotation_id", r.annotation_id ? ordered_json(*r.annotation_id) : ordered_json(nullptr)},
                          {"label", label},
                          {"reason", r.failure.value_or("unknown")}});
      continue;
    }
    for (const auto& p : r.predicted) view.expand_to(p);
    zoom_out = zoom_out || r.out_of_bounds;
    polylines.push_back({{"kind", kind},
                         {"label", label},
                         {"annotation_id", r.annotation_id ? ordered_json(*r.annotation_id) : ordered_json(nullptr)},
                         {"ade", *r.ade},
                         {"ade_text", format_ade(*r.ade)},
                         {"out_of_bounds", r.out_of_bounds},
                         {"parse_tier", r.parse_tier},
                         {"points", pts(r.predicted)}});
  }
  doc["polylines"] = std::move(polylines);
  doc["failures"] = std::move(failures);
  doc["zoom_out"] = zoom_out;
  doc["view_bounds"] = bounds_json(view);
  return doc;
}

ReportSummary write_report(const results::Log& log, double q, const std::filesystem::path& out_dir,
                           metrics::ScoreMode mode) {
  ReportSummary summary;
  summary.records = log.records.size();
  std::filesystem::create_directories(out_dir / "overlays");
  const auto& records = log.records;

  try {
    ConditionTable t1 = table_condition_comparison(records, q, mode);
    summary.dropped = t1.filter.dropped.size();
    write_file(out_dir / "table1.txt", render_table1_text(t1), summary);
    write_file(out_dir / "table1.csv", render_table1_csv(t1), summary);
  } catch (const Error& e) {
    summary.warnings.push_back(std::string("table1: ") + e.what());
    write_file(out_dir / "table1.txt", std::string("unavailable: ") + e.what() + "\n", summary);
  }
  try {
    auto t2 = table_length_buckets(records, q, mode);
    write_file(out_dir / "table2.txt", render_table2_text(t2, q), summary);
    write_file(out_dir / "table2.csv", render_table2_csv(t2), summary);
    auto t3 = table_referentiality(records, q, mode);
    write_file(out_dir / "table3.txt", render_table3_text(t3, q), summary);
    write_file(out_dir / "table3.csv", render_table3_csv(t3), summary);
  } catch (const Error& e) {
    summary.warnings.push_back(std::string("tables 2/3: ") + e.what());
  }
  auto failures = table_failures(records);
  write_file(out_dir / "failures.txt", render_failures_text(failures), summary);
  write_file(out_dir / "failures.csv", render_failures_csv(failures), summary);

  std::map<std::string, std::vector<EvaluationRecord>> by_scene;
  for (const auto& r : records) by_scene[r.scene_id].push_back(r);
  summary.scenes = by_scene.size();
  for (const auto& [id, recs] : by_scene) {
    dataset::SceneRecord scene;
    scene.scene_id = id;
    scene.ground_truth = recs.front().ground_truth;
    scene.bounds = recs.front().bounds;
    write_file(out_dir / "overlays" / (safe_file_name(id) + ".json"),
               overlay_data(scene, recs).dump(2) + "\n", summary);
  }
  return summary;
}

}  // namespace drivecue::report
