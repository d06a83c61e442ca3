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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qadv {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Tensor or vector dimensions do not line up.
struct ShapeError : Error {
  using Error::Error;
};

/// Input data is malformed, degenerate or out of its declared range.
struct DataError : Error {
  using Error::Error;
};

/// Run configuration is invalid (unknown keys, bad values).
struct ConfigError : Error {
  using Error::Error;
};

/// Text-format parse failure carrying the 1-based source line.
struct ParseError : Error {
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace qadv
