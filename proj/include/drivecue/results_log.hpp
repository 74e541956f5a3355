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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "drivecue/metrics.hpp"

namespace drivecue::results {

inline constexpr std::string_view kFormatName = "drivecue.results";
inline constexpr int kFormatVersion = 1;

struct Header {
  int version = kFormatVersion;
  std::string template_version;
  std::size_t horizon = 0;
  double dt_seconds = 0.0;
  std::string manifest;
  std::string backend_id;
};

// One JSON object per line; the first line is the header.
std::string header_to_line(const Header& header);
std::string record_to_line(const metrics::EvaluationRecord& record);
metrics::EvaluationRecord record_from_json(std::string_view line);

// Same line with the "meta" object removed; what reproducibility checks compare.
std::string strip_metadata(std::string_view line);

struct Log {
  Header header;
  std::vector<metrics::EvaluationRecord> records;
  // Byte offset just past the last complete line; a torn tail starts here.
  std::uintmax_t valid_bytes = 0;
};

// Reads a results log, ignoring a final line cut off mid-write.
// Throws Error{kIo} or Error{kSchema}.
Log read_log(const std::filesystem::path& path);

std::string triple_key(const metrics::EvaluationRecord& record);
std::string triple_key(std::string_view scene_id, metrics::ConditionKind condition,
                       std::string_view annotation_id);

}  // namespace drivecue::results
