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

#include "drivecue/parser.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <optional>

#include "text_util.hpp"

namespace drivecue::parser {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_word(char c) { return is_digit(c) || is_alpha(c) || c == '_'; }

struct NumberToken {
  double value = 0.0;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Matches a number (or nan/inf word) starting exactly at `i`, without
// checking the surrounding characters.
std::optional<NumberToken> match_number_at(std::string_view s, std::size_t i) {
  std::size_t j = i;
  bool negative = false;
  if (j < s.size() && (s[j] == '+' || s[j] == '-')) {
    negative = s[j] == '-';
    ++j;
  }
  std::size_t body = j;
  // nan / inf / infinity, case-insensitive
  auto word_at = [&](std::string_view w) {
    if (s.size() - j < w.size()) return false;
    return text::to_lower(s.substr(j, w.size())) == w;
  };
  if (j < s.size() && is_alpha(s[j])) {
    std::size_t len = word_at("infinity") ? 8 : word_at("inf") ? 3 : word_at("nan") ? 3 : 0;
    if (len == 0) return std::nullopt;
    double v = (s[j] == 'n' || s[j] == 'N') ? std::numeric_limits<double>::quiet_NaN()
                                             : std::numeric_limits<double>::infinity();
    return NumberToken{negative ? -v : v, i, j + len};
  }
  std::size_t digits = 0;
  while (j < s.size() && is_digit(s[j])) { ++j; ++digits; }
  if (j < s.size() && s[j] == '.' && j + 1 < s.size() && is_digit(s[j + 1])) {
    ++j;
    while (j < s.size() && is_digit(s[j])) { ++j; ++digits; }
  } else if (j < s.size() && s[j] == '.' && digits > 0 &&
             (j + 1 == s.size() || !is_word(s[j + 1]))) {
    ++j;  // "2." as in "speed is 2."
  }
  if (digits == 0) return std::nullopt;
  if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
    std::size_t k = j + 1;
    if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
    if (k < s.size() && is_digit(s[k])) {
      while (k < s.size() && is_digit(s[k])) ++k;
      j = k;
    }
  }
  double v = 0.0;
  std::string_view digits_text = s.substr(body, j - body);
  auto [ptr, ec] = std::from_chars(digits_text.data(), digits_text.data() + digits_text.size(), v);
  if (ec == std::errc::result_out_of_range) {
    v = std::numeric_limits<double>::infinity();
  } else if (ec != std::errc{}) {
    return std::nullopt;
  }
  return NumberToken{negative ? -v : v, i, j};
}

// Every free-standing number in `s` (not glued to words, not a unit like 1/m).
std::vector<NumberToken> scan_numbers(std::string_view s) {
  std::vector<NumberToken> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    bool could_start = is_digit(c) || c == '+' || c == '-' || c == '.' || is_alpha(c);
    bool boundary = i == 0 || !(is_word(s[i - 1]) || s[i - 1] == '.');
    if (could_start && boundary) {
      if (auto tok = match_number_at(s, i)) {
        std::size_t e = tok->end;
        bool clean_end = e == s.size() || !(is_word(s[e]) || s[e] == '/');
        if (clean_end) {
          out.push_back(*tok);
          i = e;
          continue;
        }
      }
    }
    // Skip the rest of a word so "s10" or "x2" never yields a number.
    if (is_word(c)) {
      while (i < s.size() && is_word(s[i])) ++i;
    } else {
      ++i;
    }
  }
  return out;
}

// Parses a list body such as "1, 2.5, -3" where every item must be numeric.
std::optional<std::vector<double>> numeric_list(std::string_view body, bool commas_only) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    std::size_t next = commas_only ? body.find(',', pos) : body.find_first_of(", \t\r\n", pos);
    if (next == std::string_view::npos) next = body.size();
    std::string_view item = text::trim(body.substr(pos, next - pos));
    if (!item.empty()) {
      auto tok = match_number_at(item, 0);
      if (!tok || tok->end != item.size()) return std::nullopt;
      values.push_back(tok->value);
    } else if (commas_only && next != body.size()) {
      return std::nullopt;  // ",," is malformed
    }
    pos = next + 1;
  }
  if (values.empty()) return std::nullopt;
  return values;
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

[[noreturn]] void non_finite(const char* where) {
  throw ParseError(ParseFailure::kNonFinite,
                   std::string("non-finite value in ") + where);
}

std::optional<std::vector<double>> labeled_list(std::string_view text, std::string_view label) {
  std::size_t at = text.find(label);
  while (at != std::string_view::npos) {
    std::size_t p = at + label.size();
    while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) ++p;
    if (p < text.size() && text[p] == '[') {
      std::size_t close = text.find(']', p + 1);
      if (close == std::string_view::npos) return std::nullopt;
      return numeric_list(text.substr(p + 1, close - p - 1), true);
    }
    at = text.find(label, at + 1);
  }
  return std::nullopt;
}

struct Attempt {
  bool arity_mismatch = false;
};

std::optional<SpeedCurvatureSequence> strict_tier(std::string_view text, std::size_t horizon) {
  auto speeds = labeled_list(text, "Speeds:");
  auto curvatures = labeled_list(text, "Curvatures:");
  if (!speeds || !curvatures) return std::nullopt;
  if (speeds->size() != horizon || curvatures->size() != horizon) {
    throw ParseError(ParseFailure::kWrongArity,
                     "expected " + std::to_string(horizon) + " speeds and curvatures, got " +
                         std::to_string(speeds->size()) + " and " +
                         std::to_string(curvatures->size()));
  }
  if (!all_finite(*speeds)) non_finite("Speeds list");
  if (!all_finite(*curvatures)) non_finite("Curvatures list");
  return SpeedCurvatureSequence{std::move(*speeds), std::move(*curvatures)};
}

std::optional<SpeedCurvatureSequence> lenient_tier(std::string_view text, std::size_t horizon,
                                                   Attempt& attempt) {
  std::vector<std::vector<double>> found;
  std::size_t pos = 0;
  while (found.size() < 2) {
    std::size_t open = text.find('[', pos);
    if (open == std::string_view::npos) break;
    std::size_t close = text.find(']', open + 1);
    if (close == std::string_view::npos) break;
    std::size_t inner_open = text.find('[', open + 1);
    if (inner_open != std::string_view::npos && inner_open < close) {
      pos = inner_open;
      continue;
    }
    if (auto list = numeric_list(text.substr(open + 1, close - open - 1), false)) {
      if (list->size() == horizon) {
        found.push_back(std::move(*list));
      } else {
        attempt.arity_mismatch = true;
      }
    }
    pos = close + 1;
  }
  if (found.size() < 2) return std::nullopt;
  if (!all_finite(found[0])) non_finite("speed list");
  if (!all_finite(found[1])) non_finite("curvature list");
  return SpeedCurvatureSequence{std::move(found[0]), std::move(found[1])};
}

std::optional<SpeedCurvatureSequence> fallback_tier(std::string_view text, std::size_t horizon,
                                                    Attempt& attempt) {
  std::string lower = text::to_lower(text);
  std::size_t s = lower.find("speed");
  std::size_t c = lower.find("curvature");
  if (s == std::string::npos || c == std::string::npos) return std::nullopt;

  auto segment = [&](std::size_t from, std::size_t other) {
    std::size_t to = other > from ? other : text.size();
    return text.substr(from, to - from);
  };
  auto take = [&](std::string_view seg) -> std::optional<std::vector<double>> {
    auto tokens = scan_numbers(seg);
    if (tokens.size() < horizon) {
      if (!tokens.empty()) attempt.arity_mismatch = true;
      return std::nullopt;
    }
    std::vector<double> v;
    for (std::size_t i = 0; i < horizon; ++i) v.push_back(tokens[i].value);
    return v;
  };
  auto speeds = take(segment(s, c));
  auto curvatures = take(segment(c, s));
  if (!speeds || !curvatures) return std::nullopt;
  if (!all_finite(*speeds)) non_finite("speed values");
  if (!all_finite(*curvatures)) non_finite("curvature values");
  return SpeedCurvatureSequence{std::move(*speeds), std::move(*curvatures)};
}

}  // namespace

const char* to_string(ParseFailure failure) {
  switch (failure) {
    case ParseFailure::kNoTrajectoryFound: return "NoTrajectoryFound";
    case ParseFailure::kWrongArity: return "WrongArity";
    case ParseFailure::kNonFinite: return "NonFinite";
    case ParseFailure::kEmptyResponse: return "EmptyResponse";
  }
  return "Unknown";
}

std::size_t clamp_sequence(SpeedCurvatureSequence& seq, double max_curvature) {
  std::size_t n = 0;
  for (double& v : seq.speeds) {
    if (v < 0.0) {
      v = 0.0;
      ++n;
    }
  }
  for (double& k : seq.curvatures) {
    if (std::fabs(k) > max_curvature) {
      k = std::copysign(max_curvature, k);
      ++n;
    }
  }
  return n;
}

ParsedTrajectory parse_trajectory_text(std::string_view text, std::size_t horizon,
                                       double max_curvature) {
  if (horizon == 0) throw Error(ErrorCode::kInvalidArgument, "horizon must be >= 1");
  Attempt attempt;
  ParsedTrajectory out;
  if (auto seq = strict_tier(text, horizon)) {
    out.sequence = std::move(*seq);
    out.tier = ParseTier::kStrict;
  } else if (auto seq2 = lenient_tier(text, horizon, attempt)) {
    out.sequence = std::move(*seq2);
    out.tier = ParseTier::kLenient;
  } else if (auto seq3 = fallback_tier(text, horizon, attempt)) {
    out.sequence = std::move(*seq3);
    out.tier = ParseTier::kFallback;
  } else if (attempt.arity_mismatch) {
    throw ParseError(ParseFailure::kWrongArity,
                     "numeric lists found but none with " + std::to_string(horizon) + " values");
  } else {
    throw ParseError(ParseFailure::kNoTrajectoryFound, "no speed/curvature sequence in model output");
  }
  out.clamp_count = clamp_sequence(out.sequence, max_curvature);
  return out;
}

std::string format_sequence(const SpeedCurvatureSequence& seq) {
  auto list = [](const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i > 0) s += ", ";
      s += text::format_double(v[i]);
    }
    return s + "]";
  };
  return "Speeds: " + list(seq.speeds) + "\nCurvatures: " + list(seq.curvatures);
}

std::string parse_intent_text(std::string_view text) {
  std::string collapsed = text::collapse_whitespace(text);
  if (collapsed.empty()) {
    throw ParseError(ParseFailure::kEmptyResponse, "empty intent response");
  }
  return text::truncate_utf8(collapsed, kIntentMaxChars);
}

}  // namespace drivecue::parser
