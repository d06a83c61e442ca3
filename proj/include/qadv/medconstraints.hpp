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

// Medical plausibility constraints over raw (clinical-unit) column vectors:
// physiological bounds, batch-level correlation checks and conditional rules,
// with the iterative repair loop used to project adversarial records back
// into the feasible set.
//
// Catalog text format (see docs/FORMATS.md):
//
//   [bounds]
//   <column> <lo> <hi> [category=<c>] [id=<id>] [when <predicate>]
//   [correlations]
//   <a> <b> pearson|cramers_v <expected> <tolerance> [id=<id>]
//   [rules]
//   rule <id> [category=<c>]: if <predicate> then <predicate> repair <repair>
//
//   repair := clamp <column> (>= | <=) <arith> | set <column> = <arith> | reject

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qadv/expr.hpp"
#include "qadv/schema.hpp"

namespace qadv::constraints {

/// Age-adjusted systolic blood pressure ceiling in mmHg.
double sbp_upper(double age_years);

/// Sample Pearson correlation. Throws DataError on length mismatch, n < 2 or
/// zero variance.
double pearson(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys);

/// Cramér's V of a contingency table. All-zero rows and columns are removed
/// first; throws DataError if fewer than 2x2 remain or counts are negative.
double cramers_v(const Eigen::MatrixXd& table);

Eigen::VectorXd to_raw(const Eigen::VectorXd& x_norm, std::span<const Column> columns);
/// Out-of-range raw values are mapped affinely (not clamped) and their
/// indices appended to `out_of_range` when given.
Eigen::VectorXd to_norm(const Eigen::VectorXd& x_raw, std::span<const Column> columns,
                        std::vector<Index>* out_of_range = nullptr);
Eigen::VectorXd to_raw(const Eigen::VectorXd& x_norm, const Schema& schema);
Eigen::VectorXd to_norm(const Eigen::VectorXd& x_raw, const Schema& schema,
                        std::vector<Index>* out_of_range = nullptr);

enum class Category {
  PhysiologicalBounds,
  Correlation,
  Conditional,
  TemporalConsistency,
  DemographicValidity
};
std::string_view to_string(Category c);
std::optional<Category> category_from_string(std::string_view s);

enum class Resolution { Automatic, Iterative, Irreconcilable };
std::string_view to_string(Resolution r);

struct Bound {
  std::string id;
  Index column = 0;
  double lower = 0.0;
  double upper = 0.0;
  ExprPtr when;  // null: always active
  Category category = Category::PhysiologicalBounds;
  std::size_t line = 0;
};

struct CorrelationPair {
  enum class Kind { Pearson, CramersV };
  std::string id;
  std::vector<Index> a;  // one column, or a one-hot group
  std::vector<Index> b;
  Kind kind = Kind::Pearson;
  double expected = 0.0;
  double tolerance = 0.0;
  std::size_t line = 0;
};

struct Repair {
  enum class Kind { ClampAtLeast, ClampAtMost, Set, Reject };
  Kind kind = Kind::Reject;
  Index target = -1;
  ArithPtr value;
};

struct Rule {
  std::string id;
  Category category = Category::Conditional;
  ExprPtr guard;
  ExprPtr consequence;
  Repair repair;
  std::vector<Index> guard_columns;
  std::size_t line = 0;
};

class ConstraintSet {
 public:
  std::vector<std::string> columns;
  std::vector<Bound> bounds;
  std::vector<CorrelationPair> correlations;
  std::vector<Rule> rules;
  /// Entries skipped by a lenient parse because they name unknown columns.
  std::vector<std::string> skipped;

  /// Binds the catalog to a column list. With `lenient`, entries naming
  /// columns that are absent (e.g. dropped as correlated) are skipped.
  static ConstraintSet parse(std::string_view text, const std::vector<std::string>& columns,
                             const std::string& source = "<catalog>", bool lenient = false);
  static ConstraintSet load(const std::filesystem::path& path,
                            const std::vector<std::string>& columns, bool lenient = false);

  Index size() const { return Index(columns.size()); }
  std::optional<Index> find(std::string_view column) const;
};

struct Violation {
  enum class Kind { Bound, Rule, Correlation };
  Kind kind = Kind::Bound;
  std::string id;
  Category category = Category::PhysiologicalBounds;
  std::vector<Index> columns;
  double observed = 0.0;
  double required_lower = 0.0;  // NaN when the requirement is not an interval
  double required_upper = 0.0;
  std::string repair;  // empty until a repair is applied
};

struct ViolationReport {
  std::vector<Violation> violations;
  Resolution resolution = Resolution::Automatic;
  int rounds = 0;
  bool fallback_used = false;
  bool rejected = false;

  bool valid() const { return violations.empty(); }
};

/// Bounds and rules on one record. `orig` feeds orig(col) in rules and
/// defaults to x itself.
ViolationReport check(const Eigen::VectorXd& x_raw, const ConstraintSet& cset);
ViolationReport check(const Eigen::VectorXd& x_raw, const Eigen::VectorXd& orig,
                      const ConstraintSet& cset);

/// Correlation drift over a batch of raw records (rows).
std::vector<Violation> check_correlations(const Eigen::MatrixXd& raw_rows,
                                          const ConstraintSet& cset);

struct SatisfyOptions {
  int max_rounds = 10;
  std::vector<bool> frozen;  // per column; frozen columns are never repaired
};

struct Satisfied {
  Eigen::VectorXd x;
  /// Violations found on the perturbed input, annotated with the repairs
  /// applied, plus any left over when irreconcilable.
  ViolationReport report;
};

Satisfied satisfy(const Eigen::VectorXd& x_perturbed, const Eigen::VectorXd& x_original,
                  const ConstraintSet& cset, const SatisfyOptions& options = {});

/// Repairs records in the normalized model space: denormalize, satisfy with
/// mask-inactive columns frozen, renormalize only the repaired coordinates.
class Projector {
 public:
  Projector(ConstraintSet cset, std::vector<Column> columns, int max_rounds = 10);

  Satisfied project(const Eigen::VectorXd& x_norm, const Eigen::VectorXd& clean_norm,
                    const Eigen::VectorXd& active_mask) const;
  ViolationReport check_norm(const Eigen::VectorXd& x_norm,
                             const Eigen::VectorXd& clean_norm) const;

  const ConstraintSet& constraints() const { return cset_; }
  const std::vector<Column>& columns() const { return columns_; }

 private:
  ConstraintSet cset_;
  std::vector<Column> columns_;
  int max_rounds_;
};

}  // namespace qadv::constraints
