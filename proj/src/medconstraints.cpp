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

#include "qadv/medconstraints.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>

#include "qadv/error.hpp"
#include "qadv/text_format.hpp"

namespace qadv::constraints {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double tol_for(double a, double b) {
  return 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

double sbp_upper(double age_years) {
  if (age_years < 60.0) return 140.0;
  if (age_years < 80.0) return 150.0;
  return 160.0;
}

double pearson(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) {
  if (xs.size() != ys.size()) throw DataError("pearson: length mismatch");
  if (xs.size() < 2) throw DataError("pearson: need at least two observations");
  const Eigen::ArrayXd dx = xs.array() - xs.mean();
  const Eigen::ArrayXd dy = ys.array() - ys.mean();
  const double sxx = dx.square().sum();
  const double syy = dy.square().sum();
  if (sxx <= 0.0 || syy <= 0.0) throw DataError("pearson: zero variance");
  const double r = (dx * dy).sum() / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

double cramers_v(const Eigen::MatrixXd& table) {
  if ((table.array() < 0.0).any()) throw DataError("cramers_v: negative count");
  std::vector<Index> rows, cols;
  for (Index i = 0; i < table.rows(); ++i)
    if (table.row(i).sum() > 0.0) rows.push_back(i);
  for (Index j = 0; j < table.cols(); ++j)
    if (table.col(j).sum() > 0.0) cols.push_back(j);
  if (rows.size() < 2 || cols.size() < 2)
    throw DataError("cramers_v: need at least a 2x2 table with nonzero margins");
  const Eigen::MatrixXd t = table(rows, cols);
  const double n = t.sum();
  const Eigen::VectorXd rs = t.rowwise().sum();
  const Eigen::RowVectorXd cs = t.colwise().sum();
  double chi2 = 0.0;
  for (Index i = 0; i < t.rows(); ++i) {
    for (Index j = 0; j < t.cols(); ++j) {
      const double e = rs(i) * cs(j) / n;
      chi2 += (t(i, j) - e) * (t(i, j) - e) / e;
    }
  }
  const double k = double(std::min(t.rows(), t.cols()) - 1);
  return std::min(1.0, std::sqrt(chi2 / n / k));
}

Eigen::VectorXd to_raw(const Eigen::VectorXd& x_norm, std::span<const Column> columns) {
  if (x_norm.size() != Index(columns.size()))
    throw ShapeError("to_raw: vector has " + std::to_string(x_norm.size()) + " entries, schema " +
                     std::to_string(columns.size()));
  Eigen::VectorXd out(x_norm.size());
  for (Index i = 0; i < out.size(); ++i) {
    const auto& c = columns[std::size_t(i)];
    out(i) = denormalize_value(x_norm(i), c.raw_min, c.raw_max);
  }
  return out;
}

Eigen::VectorXd to_norm(const Eigen::VectorXd& x_raw, std::span<const Column> columns,
                        std::vector<Index>* out_of_range) {
  if (x_raw.size() != Index(columns.size()))
    throw ShapeError("to_norm: vector has " + std::to_string(x_raw.size()) + " entries, schema " +
                     std::to_string(columns.size()));
  Eigen::VectorXd out(x_raw.size());
  for (Index i = 0; i < out.size(); ++i) {
    const auto& c = columns[std::size_t(i)];
    if (!(c.raw_min < c.raw_max)) throw DataError("zero-width range for column " + c.name);
    out(i) = normalize_value(x_raw(i), c.raw_min, c.raw_max);
    if (out_of_range && (x_raw(i) < c.raw_min - tol_for(c.raw_min, 0.0) ||
                         x_raw(i) > c.raw_max + tol_for(c.raw_max, 0.0)))
      out_of_range->push_back(i);
  }
  return out;
}

Eigen::VectorXd to_raw(const Eigen::VectorXd& x_norm, const Schema& schema) {
  const auto cols = schema.columns();
  return to_raw(x_norm, std::span<const Column>(cols));
}

Eigen::VectorXd to_norm(const Eigen::VectorXd& x_raw, const Schema& schema,
                        std::vector<Index>* out_of_range) {
  const auto cols = schema.columns();
  return to_norm(x_raw, std::span<const Column>(cols), out_of_range);
}

namespace {

constexpr std::pair<Category, std::string_view> kCategoryNames[] = {
    {Category::PhysiologicalBounds, "physiological"},
    {Category::Correlation, "correlation"},
    {Category::Conditional, "conditional"},
    {Category::TemporalConsistency, "temporal"},
    {Category::DemographicValidity, "demographic"},
};

}  // namespace

std::string_view to_string(Category c) {
  for (const auto& [cat, name] : kCategoryNames)
    if (cat == c) return name;
  return "?";
}

std::optional<Category> category_from_string(std::string_view s) {
  for (const auto& [cat, name] : kCategoryNames)
    if (name == s) return cat;
  return std::nullopt;
}

std::string_view to_string(Resolution r) {
  switch (r) {
    case Resolution::Automatic: return "automatic";
    case Resolution::Iterative: return "iterative";
    case Resolution::Irreconcilable: return "irreconcilable";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Catalog parsing

namespace {

double parse_double(const std::string& tok, const std::string& source, std::size_t line) {
  double v = 0.0;
  const char* end = tok.data() + tok.size();
  const auto res = std::from_chars(tok.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw ParseError(source, line, "expected a number, got '" + tok + "'");
  return v;
}

struct Options {
  std::optional<Category> category;
  std::string id;
};

// Consumes trailing key=value words starting at `from`; stops at the first
// word that is not an option.
std::size_t read_options(const std::vector<std::string>& words, std::size_t from, Options& opt,
                         const std::string& source, std::size_t line) {
  for (; from < words.size(); ++from) {
    const auto& w = words[from];
    if (w.rfind("category=", 0) == 0) {
      opt.category = category_from_string(w.substr(9));
      if (!opt.category) throw ParseError(source, line, "unknown category '" + w.substr(9) + "'");
    } else if (w.rfind("id=", 0) == 0) {
      opt.id = w.substr(3);
      if (opt.id.empty()) throw ParseError(source, line, "empty id");
    } else {
      break;
    }
  }
  return from;
}

class CatalogParser {
 public:
  CatalogParser(const std::vector<std::string>& columns, std::string source, bool lenient)
      : source_(std::move(source)), lenient_(lenient) {
    out_.columns = columns;
  }

  ConstraintSet run(std::string_view text) {
    for (const auto& line : text::read_sections(text, source_, {"bounds", "correlations", "rules"})) {
      try {
        if (line.section == "bounds") {
          bound(line);
        } else if (line.section == "correlations") {
          correlation(line);
        } else {
          rule(line);
        }
      } catch (const UnknownColumn& e) {
        if (!lenient_) throw;
        out_.skipped.push_back(source_ + ":" + std::to_string(line.number) + " (" + e.column + ")");
      }
    }
    return std::move(out_);
  }

 private:
  std::optional<Index> resolve(const std::string& name) const {
    for (std::size_t i = 0; i < out_.columns.size(); ++i)
      if (out_.columns[i] == name) return Index(i);
    return std::nullopt;
  }

  Index column(const std::string& name, std::size_t line) const {
    const auto idx = resolve(name);
    if (!idx) throw UnknownColumn(source_, line, name);
    return *idx;
  }

  // A single column, or every "<name>.<category>" column of a one-hot group.
  std::vector<Index> column_group(const std::string& name, std::size_t line) const {
    if (auto idx = resolve(name)) return {*idx};
    std::vector<Index> group;
    const std::string prefix = name + ".";
    for (std::size_t i = 0; i < out_.columns.size(); ++i)
      if (out_.columns[i].rfind(prefix, 0) == 0) group.push_back(Index(i));
    if (group.empty()) throw UnknownColumn(source_, line, name);
    return group;
  }

  ExprParser parser_for(std::string_view text, std::size_t line) const {
    return ExprParser(lex(text, source_, line),
                      [this](const std::string& n) { return resolve(n); }, source_, line);
  }

  void claim_id(const std::string& id, std::size_t line) {
    if (!ids_.insert(id).second) throw ParseError(source_, line, "duplicate id '" + id + "'");
  }

  void bound(const text::Line& line) {
    const auto words = text::tokenize(line.content, source_, line.number);
    if (words.size() < 3) throw ParseError(source_, line.number, "expected '<column> <lo> <hi>'");
    Bound b;
    b.line = line.number;
    b.column = column(words[0], line.number);
    b.lower = parse_double(words[1], source_, line.number);
    b.upper = parse_double(words[2], source_, line.number);
    if (!(b.lower <= b.upper))
      throw ParseError(source_, line.number, "lower bound exceeds upper bound");
    Options opt;
    const auto next = read_options(words, 3, opt, source_, line.number);
    if (next < words.size()) {
      if (words[next] != "when")
        throw ParseError(source_, line.number, "unexpected '" + words[next] + "'");
      const auto pos = line.content.find(" when ");
      auto p = parser_for(std::string_view(line.content).substr(pos + 6), line.number);
      b.when = p.predicate();
      if (!p.at_end()) p.fail("trailing input");
    }
    b.category = opt.category.value_or(Category::PhysiologicalBounds);
    b.id = !opt.id.empty() ? opt.id
           : b.when       ? words[0] + ".range@" + std::to_string(line.number)
                          : words[0] + ".range";
    claim_id(b.id, line.number);
    out_.bounds.push_back(std::move(b));
  }

  void correlation(const text::Line& line) {
    const auto words = text::tokenize(line.content, source_, line.number);
    if (words.size() < 5)
      throw ParseError(source_, line.number,
                       "expected '<a> <b> pearson|cramers_v <expected> <tolerance>'");
    CorrelationPair c;
    c.line = line.number;
    if (words[2] == "pearson") {
      c.kind = CorrelationPair::Kind::Pearson;
      c.a = {column(words[0], line.number)};
      c.b = {column(words[1], line.number)};
    } else if (words[2] == "cramers_v") {
      c.kind = CorrelationPair::Kind::CramersV;
      c.a = column_group(words[0], line.number);
      c.b = column_group(words[1], line.number);
    } else {
      throw ParseError(source_, line.number, "unknown correlation kind '" + words[2] + "'");
    }
    c.expected = parse_double(words[3], source_, line.number);
    c.tolerance = parse_double(words[4], source_, line.number);
    if (!(c.tolerance > 0.0)) throw ParseError(source_, line.number, "tolerance must be > 0");
    Options opt;
    const auto next = read_options(words, 5, opt, source_, line.number);
    if (next < words.size())
      throw ParseError(source_, line.number, "unexpected '" + words[next] + "'");
    c.id = !opt.id.empty() ? opt.id : words[0] + "~" + words[1];
    claim_id(c.id, line.number);
    out_.correlations.push_back(std::move(c));
  }

  void rule(const text::Line& line) {
    const auto colon = line.content.find(':');
    if (colon == std::string::npos)
      throw ParseError(source_, line.number, "expected 'rule <id> [category=<c>]: ...'");
    const auto head = text::tokenize(line.content.substr(0, colon), source_, line.number);
    if (head.size() < 2 || head[0] != "rule")
      throw ParseError(source_, line.number, "expected 'rule <id> [category=<c>]: ...'");
    Rule r;
    r.line = line.number;
    r.id = head[1];
    Options opt;
    if (read_options(head, 2, opt, source_, line.number) != head.size())
      throw ParseError(source_, line.number, "unexpected words in rule header");
    r.category = opt.category.value_or(Category::Conditional);

    auto p = parser_for(std::string_view(line.content).substr(colon + 1), line.number);
    if (!p.accept_word("if")) p.fail("expected 'if'");
    r.guard = p.predicate();
    if (!p.accept_word("then")) p.fail("expected 'then'");
    r.consequence = p.predicate();
    if (!p.accept_word("repair")) p.fail("expected 'repair'");
    if (p.accept_word("clamp")) {
      r.repair.target = p.column_ref();
      if (p.accept_symbol(">=")) {
        r.repair.kind = Repair::Kind::ClampAtLeast;
      } else if (p.accept_symbol("<=")) {
        r.repair.kind = Repair::Kind::ClampAtMost;
      } else {
        p.fail("expected '>=' or '<='");
      }
      r.repair.value = p.arith();
    } else if (p.accept_word("set")) {
      r.repair.target = p.column_ref();
      p.expect_symbol("=");
      r.repair.kind = Repair::Kind::Set;
      r.repair.value = p.arith();
    } else if (p.accept_word("reject")) {
      r.repair.kind = Repair::Kind::Reject;
    } else {
      p.fail("expected 'clamp', 'set' or 'reject'");
    }
    if (!p.at_end()) p.fail("trailing input");

    if (r.repair.kind != Repair::Kind::Reject) {
      std::vector<Index> cons;
      r.consequence->collect_columns(cons);
      if (std::find(cons.begin(), cons.end(), r.repair.target) == cons.end())
        throw ParseError(source_, line.number, "repair target does not appear in the consequence");
    }
    r.guard->collect_columns(r.guard_columns);
    std::sort(r.guard_columns.begin(), r.guard_columns.end());
    r.guard_columns.erase(std::unique(r.guard_columns.begin(), r.guard_columns.end()),
                          r.guard_columns.end());
    claim_id(r.id, line.number);
    out_.rules.push_back(std::move(r));
  }

  ConstraintSet out_;
  std::string source_;
  bool lenient_;
  std::set<std::string> ids_;
};

}  // namespace

ConstraintSet ConstraintSet::parse(std::string_view text, const std::vector<std::string>& columns,
                                   const std::string& source, bool lenient) {
  return CatalogParser(columns, source, lenient).run(text);
}

ConstraintSet ConstraintSet::load(const std::filesystem::path& path,
                                  const std::vector<std::string>& columns, bool lenient) {
  return parse(text::read_file(path), columns, path.string(), lenient);
}

std::optional<Index> ConstraintSet::find(std::string_view column) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == column) return Index(i);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Checking

namespace {

struct Interval {
  double lo = -kInf;
  double hi = kInf;
};

bool below(double v, double lo) { return v < lo - tol_for(v, lo); }
bool above(double v, double hi) { return v > hi + tol_for(v, hi); }

std::vector<Interval> active_intervals(const Eigen::VectorXd& x, const Eigen::VectorXd& orig,
                                       const ConstraintSet& cset) {
  std::vector<Interval> iv(cset.columns.size());
  for (const auto& b : cset.bounds) {
    if (b.when && !b.when->eval(x, orig)) continue;
    auto& i = iv[std::size_t(b.column)];
    i.lo = std::max(i.lo, b.lower);
    i.hi = std::min(i.hi, b.upper);
  }
  return iv;
}

bool rule_violated(const Rule& r, const Eigen::VectorXd& x, const Eigen::VectorXd& orig) {
  return r.guard->eval(x, orig) && !r.consequence->eval(x, orig);
}

Violation rule_violation(const Rule& r, const Eigen::VectorXd& x, const Eigen::VectorXd& orig) {
  Violation v;
  v.kind = Violation::Kind::Rule;
  v.id = r.id;
  v.category = r.category;
  std::vector<Index> cols = r.guard_columns;
  r.consequence->collect_columns(cols);
  if (r.repair.target >= 0) cols.push_back(r.repair.target);
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  v.columns = std::move(cols);
  v.observed = r.repair.target >= 0 ? x(r.repair.target) : kNaN;
  switch (r.repair.kind) {
    case Repair::Kind::ClampAtLeast:
      v.required_lower = r.repair.value->eval(x, orig);
      v.required_upper = kInf;
      break;
    case Repair::Kind::ClampAtMost:
      v.required_lower = -kInf;
      v.required_upper = r.repair.value->eval(x, orig);
      break;
    case Repair::Kind::Set:
      v.required_lower = v.required_upper = r.repair.value->eval(x, orig);
      break;
    case Repair::Kind::Reject:
      v.required_lower = v.required_upper = kNaN;
      break;
  }
  return v;
}

std::vector<Violation> find_violations(const Eigen::VectorXd& x, const Eigen::VectorXd& orig,
                                       const ConstraintSet& cset) {
  std::vector<Violation> out;
  for (const auto& b : cset.bounds) {
    if (b.when && !b.when->eval(x, orig)) continue;
    const double v = x(b.column);
    if (below(v, b.lower) || above(v, b.upper) || std::isnan(v)) {
      Violation viol;
      viol.kind = Violation::Kind::Bound;
      viol.id = b.id;
      viol.category = b.category;
      viol.columns = {b.column};
      viol.observed = v;
      viol.required_lower = b.lower;
      viol.required_upper = b.upper;
      out.push_back(std::move(viol));
    }
  }
  for (const auto& r : cset.rules)
    if (rule_violated(r, x, orig)) out.push_back(rule_violation(r, x, orig));
  return out;
}

void check_shapes(const Eigen::VectorXd& x, const Eigen::VectorXd& orig, const ConstraintSet& cset) {
  if (x.size() != cset.size() || orig.size() != cset.size())
    throw ShapeError("record has " + std::to_string(x.size()) + " columns, constraint set " +
                     std::to_string(cset.size()));
}

}  // namespace

ViolationReport check(const Eigen::VectorXd& x_raw, const ConstraintSet& cset) {
  return check(x_raw, x_raw, cset);
}

ViolationReport check(const Eigen::VectorXd& x_raw, const Eigen::VectorXd& orig,
                      const ConstraintSet& cset) {
  check_shapes(x_raw, orig, cset);
  ViolationReport report;
  report.violations = find_violations(x_raw, orig, cset);
  return report;
}

std::vector<Violation> check_correlations(const Eigen::MatrixXd& raw_rows,
                                          const ConstraintSet& cset) {
  if (raw_rows.cols() != cset.size())
    throw ShapeError("batch has " + std::to_string(raw_rows.cols()) + " columns, constraint set " +
                     std::to_string(cset.size()));
  std::vector<Violation> out;
  const Index n = raw_rows.rows();
  auto category_of = [&](const std::vector<Index>& group, Index row) -> Index {
    if (group.size() == 1) return raw_rows(row, group[0]) >= 0.5 ? 1 : 0;
    Index best = 0;
    for (std::size_t k = 1; k < group.size(); ++k)
      if (raw_rows(row, group[k]) > raw_rows(row, group[std::size_t(best)])) best = Index(k);
    return best;
  };
  for (const auto& c : cset.correlations) {
    double observed = kNaN;
    try {
      if (c.kind == CorrelationPair::Kind::Pearson) {
        observed = pearson(raw_rows.col(c.a[0]), raw_rows.col(c.b[0]));
      } else {
        const Index ka = c.a.size() == 1 ? 2 : Index(c.a.size());
        const Index kb = c.b.size() == 1 ? 2 : Index(c.b.size());
        Eigen::MatrixXd table = Eigen::MatrixXd::Zero(ka, kb);
        for (Index r = 0; r < n; ++r) table(category_of(c.a, r), category_of(c.b, r)) += 1.0;
        observed = cramers_v(table);
      }
    } catch (const DataError&) {
      continue;  // degenerate batch: nothing to compare
    }
    if (std::abs(observed - c.expected) > c.tolerance) {
      Violation v;
      v.kind = Violation::Kind::Correlation;
      v.id = c.id;
      v.category = Category::Correlation;
      v.columns = c.a;
      v.columns.insert(v.columns.end(), c.b.begin(), c.b.end());
      v.observed = observed;
      v.required_lower = c.expected - c.tolerance;
      v.required_upper = c.expected + c.tolerance;
      out.push_back(std::move(v));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Repair

namespace {

class Repairer {
 public:
  Repairer(const Eigen::VectorXd& orig, const ConstraintSet& cset, const std::vector<bool>& frozen,
           ViolationReport& report)
      : orig_(orig), cset_(cset), frozen_(frozen), report_(report) {}

  // One Algorithm-2 round. Returns false if a reject repair fired.
  bool round(Eigen::VectorXd& x) {
    std::set<Index> changed;
    clamp_bounds(x, &changed);
    for (const auto& r : cset_.rules)
      if (!apply_rule(r, x, &changed)) return false;
    // Consistency propagation: re-fire rules whose guards read repaired columns.
    for (const auto& r : cset_.rules) {
      const bool touched = std::any_of(r.guard_columns.begin(), r.guard_columns.end(),
                                       [&](Index c) { return changed.count(c) > 0; });
      if (touched && !apply_rule(r, x, &changed)) return false;
    }
    return true;
  }

  // Coordinate-wise fallback: bounds first, then rules take precedence.
  bool fallback(Eigen::VectorXd& x) {
    clamp_bounds(x, nullptr);
    for (const auto& r : cset_.rules)
      if (!apply_rule(r, x, nullptr)) return false;
    return true;
  }

 private:
  void clamp_bounds(Eigen::VectorXd& x, std::set<Index>* changed) {
    const auto iv = active_intervals(x, orig_, cset_);
    const Eigen::VectorXd snapshot = x;
    for (const auto& b : cset_.bounds) {
      if (b.when && !b.when->eval(snapshot, orig_)) continue;
      const Index c = b.column;
      const double v = snapshot(c);
      if (!(below(v, b.lower) || above(v, b.upper) || std::isnan(v))) continue;
      if (frozen_[std::size_t(c)]) continue;
      const double target = nearest(v, iv[std::size_t(c)], orig_(c));
      if (x(c) != target) {
        x(c) = target;
        if (changed) changed->insert(c);
      }
      annotate(b.id, "clamp " + text::format_double(target));
    }
  }

  static double nearest(double v, const Interval& iv, double orig) {
    if (iv.lo <= iv.hi) {
      if (std::isnan(v)) return std::clamp(orig, iv.lo, iv.hi);
      return std::clamp(v, iv.lo, iv.hi);
    }
    // Conflicting active bounds: pick the closer one, ties toward the clean value.
    const double dlo = std::abs(v - iv.lo), dhi = std::abs(v - iv.hi);
    if (dlo != dhi) return dlo < dhi ? iv.lo : iv.hi;
    return std::abs(orig - iv.lo) <= std::abs(orig - iv.hi) ? iv.lo : iv.hi;
  }

  bool apply_rule(const Rule& r, Eigen::VectorXd& x, std::set<Index>* changed) {
    if (!rule_violated(r, x, orig_)) return true;
    if (r.repair.kind == Repair::Kind::Reject) {
      annotate(r.id, "reject");
      return false;
    }
    const Index t = r.repair.target;
    if (frozen_[std::size_t(t)]) return true;
    const double value = r.repair.value->eval(x, orig_);
    double next = x(t);
    switch (r.repair.kind) {
      case Repair::Kind::ClampAtLeast: next = std::max(x(t), value); break;
      case Repair::Kind::ClampAtMost: next = std::min(x(t), value); break;
      case Repair::Kind::Set: next = value; break;
      case Repair::Kind::Reject: break;
    }
    if (next != x(t)) {
      x(t) = next;
      if (changed) changed->insert(t);
    }
    annotate(r.id, (r.repair.kind == Repair::Kind::Set ? "set " : "clamp ") +
                       text::format_double(next));
    return true;
  }

  void annotate(const std::string& id, std::string repair) {
    for (auto& v : report_.violations) {
      if (v.id == id && v.repair.empty()) {
        v.repair = std::move(repair);
        return;
      }
    }
  }

  const Eigen::VectorXd& orig_;
  const ConstraintSet& cset_;
  const std::vector<bool>& frozen_;
  ViolationReport& report_;
};

}  // namespace

Satisfied satisfy(const Eigen::VectorXd& x_perturbed, const Eigen::VectorXd& x_original,
                  const ConstraintSet& cset, const SatisfyOptions& options) {
  check_shapes(x_perturbed, x_original, cset);
  if (options.max_rounds < 1) throw ConfigError("satisfy: max_rounds must be >= 1");
  std::vector<bool> frozen = options.frozen;
  if (frozen.empty()) frozen.assign(std::size_t(cset.size()), false);
  if (frozen.size() != std::size_t(cset.size()))
    throw ShapeError("satisfy: frozen mask size mismatch");

  Satisfied out;
  out.x = x_perturbed;
  out.report.violations = find_violations(x_perturbed, x_original, cset);
  if (out.report.violations.empty()) return out;

  Repairer repairer(x_original, cset, frozen, out.report);
  std::vector<Eigen::VectorXd> seen{x_perturbed};
  bool stalled = false;
  for (int r = 1; r <= options.max_rounds; ++r) {
    out.report.rounds = r;
    if (!repairer.round(out.x)) {
      out.report.rejected = true;
      break;
    }
    if (find_violations(out.x, x_original, cset).empty()) {
      out.report.resolution = r == 1 ? Resolution::Automatic : Resolution::Iterative;
      return out;
    }
    if (std::find(seen.begin(), seen.end(), out.x) != seen.end()) {
      stalled = true;
      break;
    }
    seen.push_back(out.x);
  }

  if (stalled) {
    out.report.fallback_used = true;
    Eigen::VectorXd fb = x_perturbed;
    if (!repairer.fallback(fb)) {
      out.report.rejected = true;
    } else if (find_violations(fb, x_original, cset).empty()) {
      out.x = fb;
      out.report.resolution = Resolution::Iterative;
      return out;
    }
    out.x = fb;
  }

  // Irreconcilable: restore the clean values of the offending coordinates.
  out.report.resolution = Resolution::Irreconcilable;
  for (int pass = 0; pass < 2; ++pass) {
    const auto left = find_violations(out.x, x_original, cset);
    if (left.empty()) break;
    for (const auto& v : left)
      for (Index c : v.columns)
        if (!frozen[std::size_t(c)]) out.x(c) = x_original(c);
  }
  for (auto v : find_violations(out.x, x_original, cset)) {
    v.repair = "unresolved";
    out.report.violations.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------

Projector::Projector(ConstraintSet cset, std::vector<Column> columns, int max_rounds)
    : cset_(std::move(cset)), columns_(std::move(columns)), max_rounds_(max_rounds) {
  if (Index(columns_.size()) != cset_.size())
    throw ShapeError("projector: constraint set and column list disagree");
}

Satisfied Projector::project(const Eigen::VectorXd& x_norm, const Eigen::VectorXd& clean_norm,
                             const Eigen::VectorXd& active_mask) const {
  if (active_mask.size() != x_norm.size()) throw ShapeError("projector: mask size mismatch");
  const Eigen::VectorXd raw = to_raw(x_norm, columns_);
  const Eigen::VectorXd raw_clean = to_raw(clean_norm, columns_);
  SatisfyOptions opt;
  opt.max_rounds = max_rounds_;
  opt.frozen.resize(columns_.size());
  for (Index i = 0; i < active_mask.size(); ++i) opt.frozen[std::size_t(i)] = active_mask(i) == 0.0;
  Satisfied s = satisfy(raw, raw_clean, cset_, opt);
  Eigen::VectorXd out = x_norm;
  for (Index i = 0; i < out.size(); ++i) {
    if (s.x(i) == raw(i)) continue;
    const auto& c = columns_[std::size_t(i)];
    out(i) = s.x(i) == raw_clean(i) ? clean_norm(i)
                                      : normalize_value(s.x(i), c.raw_min, c.raw_max);
  }
  s.x = std::move(out);
  return s;
}

ViolationReport Projector::check_norm(const Eigen::VectorXd& x_norm,
                                      const Eigen::VectorXd& clean_norm) const {
  return check(to_raw(x_norm, columns_), to_raw(clean_norm, columns_), cset_);
}

}  // namespace qadv::constraints
