// sasv/text_io.hpp
//
// Copyright 2022  sasvkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sasv {

/// Error raised by any of the text-format parsers.  line() is 1-based;
/// 0 means the error is not tied to a particular line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : std::runtime_error(line == 0 ? message
                                     : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace textio {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
}

/// Splits a line on runs of ASCII whitespace.  Views point into `line`.
inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

inline bool is_blank(std::string_view line) {
  for (char c : line)
    if (!is_space(c)) return false;
  return true;
}

inline bool is_comment(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && is_space(line[i])) ++i;
  return i < line.size() && line[i] == '#';
}

/// Reads lines with 1-based numbering, skipping blank lines.  Comment lines
/// (first non-space char '#') are skipped unless keep_comments is set; the
/// embedding parser needs to see its "#dim" header line.
class LineReader {
 public:
  explicit LineReader(std::istream& in, bool keep_comments = false)
      : in_(in), keep_comments_(keep_comments) {}

  bool next(std::string& line, std::size_t& line_number) {
    while (std::getline(in_, line)) {
      ++count_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (is_blank(line)) continue;
      if (!keep_comments_ && is_comment(line)) continue;
      line_number = count_;
      return true;
    }
    return false;
  }

 private:
  std::istream& in_;
  bool keep_comments_;
  std::size_t count_ = 0;
};

/// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double value) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

/// Fixed two-decimal rendering used for percentage reports.
inline std::string format_fixed2(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return std::string(buf);
}

/// Parses a decimal or scientific literal; the whole field must be consumed.
/// Accepts inf/nan spellings — callers decide whether non-finite is an error.
inline std::optional<double> parse_double(std::string_view field) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last) return std::nullopt;
  return value;
}

inline std::optional<long long> parse_int(std::string_view field) {
  long long value = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last) return std::nullopt;
  return value;
}

}  // namespace textio
}  // namespace sasv
