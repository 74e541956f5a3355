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
#include <string>
#include <string_view>
#include <vector>

namespace drivecue::text {

bool is_space(char c);
std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Maximal runs of non-whitespace.
std::vector<std::string_view> split_whitespace(std::string_view s);
std::string collapse_whitespace(std::string_view s);

// Truncates to at most `max_codepoints` UTF-8 code points, never splitting one.
std::string truncate_utf8(std::string_view s, std::size_t max_codepoints);

// RFC 4180 CSV. `lines` receives the 1-based source line of each record.
// Throws std::runtime_error on an unterminated quoted field.
void parse_csv(std::string_view text, std::vector<std::vector<std::string>>& records,
               std::vector<std::size_t>& lines);

std::string base64_encode(std::string_view bytes);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

// Fixed-point with `decimals` digits, correctly rounded (ties to even).
std::string format_fixed(double v, int decimals);

}  // namespace drivecue::text
