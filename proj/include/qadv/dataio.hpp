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

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "qadv/schema.hpp"

namespace qadv::data {

/// Raw records in clinical units: one row per record, one cell per schema
/// feature. Categorical cells hold the category index; NaN marks a missing
/// cell.
struct RawTable {
  struct Flag {
    std::size_t line = 0;  // CSV line, 0 if not from a file
    Index row = 0;
    Index feature = 0;
    std::string message;
  };

  Eigen::MatrixXd cells;
  std::vector<std::size_t> source_lines;
  std::vector<Flag> flags;  // values outside the declared raw range

  Index rows() const { return cells.rows(); }
  /// Removes flagged rows; returns how many were removed.
  Index drop_flagged();
};

RawTable parse_csv(std::string_view text, const Schema& schema, const std::string& source = "<csv>");
RawTable load_csv(const std::filesystem::path& path, const Schema& schema);
std::string to_csv(const RawTable& table, const Schema& schema);

/// Median (continuous) / mode (categorical) fill values.
struct Imputer {
  std::vector<double> fill;  // per schema feature; NaN for label/year

  static Imputer fit(const RawTable& table, const Schema& schema, const std::vector<Index>& rows);
  void apply(RawTable& table) const;
};

/// Fits on every row and fills in place.
RawTable impute(RawTable table, const Schema& schema);

struct Dataset {
  Schema schema;
  QuestionLayout layout;
  std::vector<Column> columns;
  Eigen::MatrixXd x;        // rows x columns, normalized to [-1, 1]
  std::vector<int> labels;  // 0 = low risk, 1 = high risk
  std::vector<int> years;   // empty without a year field

  Index rows() const { return x.rows(); }
  Index cols() const { return x.cols(); }
  Dataset subset(const std::vector<Index>& rows) const;
};

Dataset encode_and_normalize(const RawTable& table, const Schema& schema);

/// Greedy |rho| > threshold removal over the given dataset's rows. Drops the
/// later feature of each offending pair; returns the dropped feature names.
std::vector<std::string> correlated_features(const Dataset& dataset, double threshold = 0.95);
Dataset drop_features(const Dataset& dataset, const std::vector<std::string>& names);

struct DropResult {
  Dataset dataset;
  std::vector<std::string> dropped;
};
DropResult drop_correlated(const Dataset& dataset, double threshold = 0.95);

struct Split {
  Dataset train;
  Dataset test;
  Index excluded = 0;  // rows whose year is in neither set
};
Split temporal_split(const Dataset& dataset, const std::vector<int>& train_years,
                     const std::vector<int>& test_years);

struct SynthData {
  Schema schema;
  RawTable table;
  std::string catalog_text;     // reference constraint catalog for this schema
  Eigen::VectorXd weights;      // ground-truth logistic weights per model column
  std::vector<std::string> informative;  // feature names with nonzero weight
};

/// Desk-scale stand-in for survey data: d question features (mixed
/// continuous / categorical) with a planted correlated pair (f00, f01) and a
/// planted conditional rule (f02 -> f03 elevated). Labels follow a sparse
/// logistic model; difficulty scales label noise (0 = separable).
SynthData synth_generate(Index d, Index n, std::uint64_t seed, double difficulty);

void save_cache(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_cache(const std::filesystem::path& path);

struct PipelineConfig {
  std::vector<int> train_years{2005, 2006, 2007, 2008, 2009};
  std::vector<int> test_years{2010, 2011};
  double correlation_threshold = 0.95;
  /// Used instead of the year split when the schema has no year field.
  double test_fraction = 0.3;
  std::uint64_t seed = 0;
};

struct Prepared {
  Dataset train;
  Dataset test;
  Imputer imputer;  // fitted on training rows only
  std::vector<std::string> dropped;
  Index flagged_rows = 0;
  Index excluded_rows = 0;
};

/// Flag removal, split, train-only imputation, encoding and correlated-feature
/// removal (decided on training rows), in that order.
Prepared prepare(RawTable table, const Schema& schema, const PipelineConfig& config);

}  // namespace qadv::data
