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

// Feature schema: the clinical metadata that maps raw records onto the
// normalized [-1, 1] model columns.
//
// A continuous feature is one column, affinely mapped from [raw_min, raw_max].
// A categorical feature with two categories is one column holding the category
// index (0 or 1) mapped from [0, 1]. A categorical feature with k >= 3
// categories becomes k one-hot columns named "<feature>.<category>".
// Label and year fields are carried alongside but are never model columns.

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qadv {

using Eigen::Index;

enum class FeatureKind { Continuous, Categorical };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::Continuous;
  double raw_min = 0.0;
  double raw_max = 1.0;
  std::vector<std::string> categories;
  std::string units;
  std::string description;
  bool year_field = false;
  bool label = false;

  bool is_question() const { return !year_field && !label; }
  Index cardinality() const { return Index(categories.size()); }
  /// Number of model columns this feature expands to.
  Index width() const {
    if (kind == FeatureKind::Continuous) return 1;
    return categories.size() <= 2 ? 1 : Index(categories.size());
  }
  std::optional<Index> category_index(std::string_view token) const;
};

/// One normalized model column with the raw interval it maps from.
struct Column {
  std::string name;
  Index feature = 0;    // index into Schema::features
  Index question = 0;   // index among question features
  Index category = -1;  // one-hot category, -1 otherwise
  double raw_min = 0.0;
  double raw_max = 1.0;
};

inline double normalize_value(double raw, double lo, double hi) {
  return 2.0 * (raw - lo) / (hi - lo) - 1.0;
}
inline double denormalize_value(double norm, double lo, double hi) {
  return lo + (norm + 1.0) * (hi - lo) / 2.0;
}

/// Which model columns each question reveals.
struct QuestionLayout {
  std::vector<Index> offset;
  std::vector<Index> width;
  Index columns = 0;

  Index questions() const { return Index(offset.size()); }
  /// Expands a per-question asked flag vector into a per-column 0/1 mask.
  Eigen::VectorXd column_mask(const std::vector<bool>& asked) const;
  /// Layout where every question is exactly one column.
  static QuestionLayout identity(Index d);
};

class Schema {
 public:
  std::vector<FeatureSpec> features;

  static Schema parse(std::string_view text, const std::string& source = "<schema>");
  static Schema load(const std::filesystem::path& path);
  std::string to_text() const;

  /// Throws DataError when the invariants (unique names, exactly one label,
  /// at most one year field, sane ranges) do not hold.
  void validate() const;

  std::optional<Index> find(std::string_view name) const;
  Index label_index() const;
  std::optional<Index> year_index() const;
  std::vector<Index> question_features() const;
  std::vector<Column> columns() const;
  std::vector<std::string> column_names() const;
  QuestionLayout layout() const;

  /// Copy without the given question features.
  Schema without(const std::vector<std::string>& feature_names) const;
};

}  // namespace qadv
