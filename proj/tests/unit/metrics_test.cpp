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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "drivecue/error.hpp"
#include "drivecue/metrics.hpp"

using namespace drivecue;
using namespace drivecue::metrics;

namespace {

double brute_ade(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double dx = a[i].x - b[i].x;
    double dy = a[i].y - b[i].y;
    s += std::sqrt(dx * dx + dy * dy);
  }
  return s / static_cast<double>(a.size());
}

std::vector<Vec2> random_points(std::mt19937_64& rng, std::size_t n, double range = 100.0) {
  std::uniform_real_distribution<double> u(-range, range);
  std::vector<Vec2> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back({u(rng), u(rng)});
  return v;
}

EvaluationRecord rec(const std::string& scene, ConditionKind c, std::optional<double> ade) {
  EvaluationRecord r;
  r.scene_id = scene;
  r.condition = c;
  r.ade = ade;
  if (c == ConditionKind::kInstructed) r.annotation_id = scene + "-a";
  return r;
}

// Number of scenes a correct filter may drop: ceil((1 - q) * n).
std::size_t drop_bound(std::size_t n, double q) {
  return static_cast<std::size_t>(std::ceil((1.0 - q) * static_cast<double>(n) - 1e-9));
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("ade basics") {
  std::vector<Vec2> a = {{0, 0}, {1, 1}, {2, 2}};
  CHECK(ade(a, a) == 0.0);
  std::vector<Vec2> b = {{3, 4}, {4, 5}, {5, 6}};
  CHECK(ade(a, b) == 5.0);
  CHECK_THROWS_AS(ade(a, std::vector<Vec2>{{0, 0}}), Error);
  CHECK_THROWS_AS(ade(std::vector<Vec2>{}, std::vector<Vec2>{}), Error);
}

TEST_CASE("ade matches a brute-force oracle and is symmetric") {
  std::mt19937_64 rng(53);
  for (int i = 0; i < 1000; ++i) {
    auto a = random_points(rng, 10);
    auto b = random_points(rng, 10);
    double v = ade(a, b);
    CHECK(std::fabs(v - brute_ade(a, b)) <= 1e-12);
    CHECK(v == ade(b, a));
    CHECK(v >= 0.0);
  }
}

TEST_CASE("ade is translation invariant and scales linearly") {
  std::mt19937_64 rng(59);
  for (int i = 0; i < 200; ++i) {
    auto a = random_points(rng, 10, 10.0);
    auto b = random_points(rng, 10, 10.0);
    Vec2 shift{3.25, -7.5};
    auto as = a, bs = b, a2 = a, b2 = b;
    for (auto& p : as) p = p + shift;
    for (auto& p : bs) p = p + shift;
    for (auto& p : a2) p = 2.0 * p;
    for (auto& p : b2) p = 2.0 * p;
    CHECK(ade(as, bs) == doctest::Approx(ade(a, b)).epsilon(1e-12));
    CHECK(ade(a2, b2) == doctest::Approx(2.0 * ade(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("out of bounds uses a closed region grown by the margin") {
  Bounds b{0, 0, 10, 10};
  CHECK_FALSE(out_of_bounds(std::vector<Vec2>{{0, 0}, {10, 10}}, b, 0.0));
  CHECK_FALSE(out_of_bounds(std::vector<Vec2>{{-30, 40}}, b, 30.0));
  CHECK(out_of_bounds(std::vector<Vec2>{{5, 5}, {-30.001, 5}}, b, 30.0));
  CHECK_THROWS_AS(out_of_bounds(std::vector<Vec2>{}, b, -1.0), Error);
}

TEST_CASE("quantile interpolates between order statistics") {
  CHECK(quantile({1, 2, 3, 4, 5}, 0.5) == 3.0);
  CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(quantile({5, 1}, 0.975) == doctest::Approx(4.9));
  CHECK(quantile({7}, 0.3) == 7.0);
  CHECK_THROWS_AS(quantile({}, 0.5), Error);
}

TEST_CASE("filter drops exactly the outlier") {
  std::vector<EvaluationRecord> rs;
  for (int i = 0; i < 40; ++i) {
    std::string id = "s" + std::to_string(100 + i);
    rs.push_back(rec(id, ConditionKind::kBaseline, 1.0));
    rs.push_back(rec(id, ConditionKind::kInstructed, i == 17 ? 10000.0 : 1.0));
  }
  auto f = percentile_filter(rs, 0.975);
  CHECK(f.dropped == std::vector<std::string>{"s117"});
  CHECK(f.kept.size() == 39);
}

TEST_CASE("filter keeps everything when scores tie") {
  std::vector<EvaluationRecord> rs;
  for (int i = 0; i < 30; ++i) rs.push_back(rec("s" + std::to_string(i), ConditionKind::kBaseline, 2.5));
  auto f = percentile_filter(rs, 0.975);
  CHECK(f.dropped.empty());
  CHECK(f.kept.size() == 30);
}

TEST_CASE("filter respects the drop bound and is idempotent in size") {
  std::mt19937_64 rng(61);
  std::lognormal_distribution<double> score(1.0, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 10 + trial * 17;
    std::vector<EvaluationRecord> rs;
    for (std::size_t i = 0; i < n; ++i) {
      std::string id = "scene" + std::to_string(i);
      rs.push_back(rec(id, ConditionKind::kBaseline, score(rng)));
      rs.push_back(rec(id, ConditionKind::kInstructed, score(rng)));
    }
    auto f = percentile_filter(rs, 0.975);
    CHECK(f.dropped.size() <= drop_bound(n, 0.975));
    CHECK(f.kept.size() + f.dropped.size() == n);
    CHECK(std::is_sorted(f.kept.begin(), f.kept.end()));
  }
}

TEST_CASE("score modes and scenes without a finite score") {
  std::vector<EvaluationRecord> rs;
  for (int i = 0; i < 10; ++i) {
    std::string id = "s" + std::to_string(i);
    rs.push_back(rec(id, ConditionKind::kBaseline, i == 3 ? 500.0 : 1.0));
    rs.push_back(rec(id, ConditionKind::kInstructed, i == 6 ? 900.0 : 1.0));
  }
  rs.push_back(rec("broken", ConditionKind::kBaseline, std::nullopt));
  auto pooled = percentile_filter(rs, 0.9);
  auto base = percentile_filter(rs, 0.9, ScoreMode::kBaselineOnly);
  auto inst = percentile_filter(rs, 0.9, ScoreMode::kInstructedOnly);
  CHECK(pooled.dropped == std::vector<std::string>{"s6"});
  CHECK(base.dropped == std::vector<std::string>{"s3"});
  CHECK(inst.dropped == std::vector<std::string>{"s6"});
  CHECK(std::find(pooled.kept.begin(), pooled.kept.end(), "broken") != pooled.kept.end());
  CHECK_THROWS_AS(percentile_filter(rs, 1.0), Error);
  CHECK_THROWS_AS(percentile_filter(std::vector<EvaluationRecord>{rec("x", ConditionKind::kBaseline, std::nullopt)}, 0.5),
                  Error);
}

TEST_CASE("scene aggregates order best, average and worst") {
  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  for (int i = 0; i < 500; ++i) {
    std::vector<EvaluationRecord> rs{rec("s", ConditionKind::kBaseline, u(rng))};
    int n = 1 + i % 7;
    for (int k = 0; k < n; ++k) rs.push_back(rec("s", ConditionKind::kInstructed, u(rng)));
    rs.push_back(rec("s", ConditionKind::kInstructed, std::nullopt));
    auto a = aggregate_scene(rs);
    REQUIRE(a.avg_ade);
    CHECK(*a.best_ade <= *a.avg_ade);
    CHECK(*a.avg_ade <= *a.worst_ade);
    CHECK(a.instructed_count == static_cast<std::size_t>(n));
    CHECK(a.baseline_ade == rs[0].ade);
  }
  auto only_base = aggregate_scene(std::vector<EvaluationRecord>{rec("b", ConditionKind::kBaseline, 2.0)});
  CHECK_FALSE(only_base.avg_ade);
}

TEST_CASE("aggregate_all groups by scene") {
  std::vector<EvaluationRecord> rs{rec("b", ConditionKind::kBaseline, 1.0), rec("a", ConditionKind::kInstructed, 2.0),
                                   rec("a", ConditionKind::kInstructed, 4.0)};
  auto all = aggregate_all(rs);
  REQUIRE(all.size() == 2);
  CHECK(all[0].scene_id == "a");
  CHECK(all[0].avg_ade == 3.0);
  CHECK(all[1].baseline_ade == 1.0);
}

TEST_CASE("every word count lands in exactly one bucket") {
  auto in_range = [](std::size_t n, std::string_view range) {
    auto dash = range.find('-');
    if (dash == std::string_view::npos) return n >= std::stoul(std::string(range.substr(0, range.size() - 1)));
    return n >= std::stoul(std::string(range.substr(0, dash))) &&
           n <= std::stoul(std::string(range.substr(dash + 1)));
  };
  for (std::size_t n = 0; n <= 40; ++n) {
    int hits = 0;
    for (auto b : kAllBuckets) hits += in_range(n, word_range(b));
    CHECK(hits == 1);
    CHECK(in_range(n, word_range(bucket_for_count(n))));
  }
  CHECK(bucket_for_count(4) == LengthBucket::kUltraShort);
  CHECK(bucket_for_count(5) == LengthBucket::kShort);
  CHECK(bucket_for_count(8) == LengthBucket::kShort);
  CHECK(bucket_for_count(9) == LengthBucket::kTypical);
  CHECK(bucket_for_count(12) == LengthBucket::kTypical);
  CHECK(bucket_for_count(13) == LengthBucket::kDescriptive);
  CHECK(bucket_for_count(18) == LengthBucket::kDescriptive);
  CHECK(bucket_for_count(19) == LengthBucket::kLong);
}

TEST_CASE("word counting splits on any whitespace") {
  CHECK(word_count("") == 0);
  CHECK(word_count("  Stop  ") == 1);
  CHECK(word_count("Go\tstraight\nnow") == 3);
  CHECK(length_bucket("Stop at the curb on the right side of the road right before the crosswalk.") ==
        LengthBucket::kDescriptive);
}

TEST_CASE("referentiality flags map to four categories") {
  CHECK(referentiality_category(false, false) == Referentiality::kNone);
  CHECK(referentiality_category(true, false) == Referentiality::kStaticOnly);
  CHECK(referentiality_category(false, true) == Referentiality::kDynamicOnly);
  CHECK(referentiality_category(true, true) == Referentiality::kStaticDynamic);
  for (auto r : {Referentiality::kNone, Referentiality::kStaticOnly, Referentiality::kDynamicOnly,
                 Referentiality::kStaticDynamic}) {
    CHECK(referentiality_from_string(to_string(r)) == r);
  }
  CHECK(condition_from_string("baseline") == ConditionKind::kBaseline);
  CHECK_FALSE(condition_from_string("other"));
}

}  // TEST_SUITE
