/* Copyright 2026 The qadv Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

// Line-oriented "[section]" text files shared by the schema and the
// constraint catalog. '#' starts a comment; blank lines are ignored.

#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace qadv::text {

struct Line {
  std::size_t number = 0;  // 1-based
  std::string section;
  std::string content;     // trimmed, comment stripped
};

std::vector<Line> read_sections(std::string_view text, const std::string& source,
                                std::initializer_list<std::string_view> allowed);

/// Whitespace tokenizer honouring double-quoted strings (quotes removed).
std::vector<std::string> tokenize(std::string_view line, const std::string& source,
                                  std::size_t line_number);

std::string trim(std::string_view s);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

/// Fixed-point with `digits` decimals.
std::string fixed(double v, int digits);

}  // namespace qadv::text
