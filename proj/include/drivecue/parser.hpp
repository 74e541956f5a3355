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
#include <string>
#include <string_view>
#include <vector>

#include "drivecue/dataset.hpp"
#include "drivecue/error.hpp"

namespace drivecue::parser {

inline constexpr double kDefaultMaxCurvature = 1.0;  // 1/m
inline constexpr std::size_t kIntentMaxChars = 500;

struct SpeedCurvatureSequence {
  std::vector<double> speeds;      // m/s
  std::vector<double> curvatures;  // 1/m, positive turns left

  std::size_t size() const { return speeds.size(); }
  friend bool operator==(const SpeedCurvatureSequence&,
                         const SpeedCurvatureSequence&) = default;
};

// Which extraction rule produced a sequence.
enum class ParseTier {
  kStrict = 1,    // labeled "Speeds: [...]" / "Curvatures: [...]"
  kLenient = 2,   // first two bracketed numeric lists of the right length
  kFallback = 3,  // numbers following the words "speed" and "curvature"
};

enum class ParseFailure {
  kNoTrajectoryFound,
  kWrongArity,
  kNonFinite,
  kEmptyResponse,
};

const char* to_string(ParseFailure failure);

class ParseError : public Error {
 public:
  ParseError(ParseFailure failure, const std::string& message)
      : Error(ErrorCode::kParse, message), failure_(failure) {}
  ParseFailure failure() const noexcept { return failure_; }

 private:
  ParseFailure failure_;
};

struct ParsedTrajectory {
  SpeedCurvatureSequence sequence;
  ParseTier tier = ParseTier::kStrict;
  std::size_t clamp_count = 0;
};

// Negative speeds clamp to 0 and |curvature| to max_curvature; every clamp is
// counted. Throws ParseError.
ParsedTrajectory parse_trajectory_text(std::string_view text,
                                       std::size_t horizon = dataset::kDefaultHorizon,
                                       double max_curvature = kDefaultMaxCurvature);

// Applies the clamps in place and returns how many values changed.
std::size_t clamp_sequence(SpeedCurvatureSequence& seq,
                           double max_curvature = kDefaultMaxCurvature);

// The strict two-line format; parse_trajectory_text reads it back exactly.
std::string format_sequence(const SpeedCurvatureSequence& seq);

// Trimmed, whitespace-collapsed and cut to 500 code points. Throws
// ParseError{kEmptyResponse} for blank text.
std::string parse_intent_text(std::string_view text);

}  // namespace drivecue::parser
