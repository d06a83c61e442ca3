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

#include "qadv/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "qadv/error.hpp"
#include "qadv/medconstraints.hpp"
#include "qadv/text_format.hpp"

namespace qadv::data {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv_line(std::string_view line, const std::string& source,
                                        std::size_t number) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(text::trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError(source, number, "unterminated quote");
  out.push_back(text::trim(cur));
  return out;
}

bool is_missing(std::string_view cell) { return cell.empty() || cell == "NA" || cell == "?"; }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

Index RawTable::drop_flagged() {
  std::set<Index> bad;
  for (const auto& f : flags) bad.insert(f.row);
  if (bad.empty()) return 0;
  std::vector<Index> keep;
  for (Index r = 0; r < rows(); ++r)
    if (!bad.count(r)) keep.push_back(r);
  cells = Eigen::MatrixXd(cells(keep, Eigen::all));
  std::vector<std::size_t> lines;
  for (Index r : keep)
    lines.push_back(r < Index(source_lines.size()) ? source_lines[std::size_t(r)] : 0);
  source_lines = std::move(lines);
  flags.clear();
  return Index(bad.size());
}

RawTable parse_csv(std::string_view text, const Schema& schema, const std::string& source) {
  std::vector<std::pair<std::size_t, std::string>> lines;
  {
    std::size_t number = 0, start = 0;
    while (start <= text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      ++number;
      std::string line(text.substr(start, end - start));
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!text::trim(line).empty()) lines.emplace_back(number, std::move(line));
      start = end + 1;
    }
  }
  if (lines.empty()) throw ParseError(source, 1, "empty file: expected a header row");

  const auto header = split_csv_line(lines[0].second, source, lines[0].first);
  std::vector<Index> feature_of_field(header.size(), -1);
  std::vector<bool> seen(schema.features.size(), false);
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto f = schema.find(header[i]);
    if (!f) throw ParseError(source, lines[0].first, "unknown column '" + header[i] + "'");
    if (seen[std::size_t(*f)])
      throw ParseError(source, lines[0].first, "duplicate column '" + header[i] + "'");
    seen[std::size_t(*f)] = true;
    feature_of_field[i] = *f;
  }
  for (std::size_t f = 0; f < seen.size(); ++f)
    if (!seen[f])
      throw ParseError(source, lines[0].first,
                       "missing column '" + schema.features[f].name + "'");

  RawTable table;
  table.cells.resize(Index(lines.size() - 1), Index(schema.features.size()));
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto& [number, line] = lines[li];
    const Index row = Index(li - 1);
    table.source_lines.push_back(number);
    const auto fields = split_csv_line(line, source, number);
    if (fields.size() != header.size())
      throw ParseError(source, number,
                       "expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()));
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const Index fi = feature_of_field[i];
      const auto& spec = schema.features[std::size_t(fi)];
      const auto& cell = fields[i];
      if (is_missing(cell)) {
        if (!spec.is_question())
          throw ParseError(source, number, "missing value in '" + spec.name + "'");
        table.cells(row, fi) = kNaN;
        continue;
      }
      if (spec.kind == FeatureKind::Categorical) {
        const auto idx = spec.category_index(cell);
        if (!idx)
          throw ParseError(source, number,
                           "unknown category '" + cell + "' for '" + spec.name + "'");
        table.cells(row, fi) = double(*idx);
        continue;
      }
      double v = 0.0;
      const char* end = cell.data() + cell.size();
      const auto res = std::from_chars(cell.data(), end, v);
      if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
        throw ParseError(source, number, "bad number '" + cell + "' in '" + spec.name + "'");
      if (spec.year_field && v != std::floor(v))
        throw ParseError(source, number, "year must be an integer");
      table.cells(row, fi) = v;
      if (!spec.year_field && (v < spec.raw_min || v > spec.raw_max)) {
        table.flags.push_back({number, row, fi,
                               spec.name + "=" + cell + " outside [" +
                                   text::format_double(spec.raw_min) + ", " +
                                   text::format_double(spec.raw_max) + "]"});
      }
    }
  }
  return table;
}

RawTable load_csv(const std::filesystem::path& path, const Schema& schema) {
  return parse_csv(text::read_file(path), schema, path.string());
}

std::string to_csv(const RawTable& table, const Schema& schema) {
  std::ostringstream out;
  for (std::size_t f = 0; f < schema.features.size(); ++f)
    out << (f ? "," : "") << csv_escape(schema.features[f].name);
  out << '\n';
  for (Index r = 0; r < table.rows(); ++r) {
    for (std::size_t f = 0; f < schema.features.size(); ++f) {
      if (f) out << ',';
      const double v = table.cells(r, Index(f));
      const auto& spec = schema.features[f];
      if (std::isnan(v)) continue;
      if (spec.kind == FeatureKind::Categorical) {
        out << csv_escape(spec.categories.at(std::size_t(v)));
      } else {
        out << text::format_double(v);
      }
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

Imputer Imputer::fit(const RawTable& table, const Schema& schema, const std::vector<Index>& rows) {
  Imputer imp;
  imp.fill.assign(schema.features.size(), kNaN);
  for (std::size_t f = 0; f < schema.features.size(); ++f) {
    const auto& spec = schema.features[f];
    if (!spec.is_question()) continue;
    std::vector<double> values;
    for (Index r : rows) {
      const double v = table.cells(r, Index(f));
      if (!std::isnan(v)) values.push_back(v);
    }
    if (values.empty()) throw DataError("column '" + spec.name + "' has no observed values");
    if (spec.kind == FeatureKind::Continuous) {
      std::sort(values.begin(), values.end());
      const std::size_t n = values.size();
      imp.fill[f] = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    } else {
      std::vector<Index> counts(spec.categories.size(), 0);
      for (double v : values) ++counts[std::size_t(v)];
      imp.fill[f] = double(std::max_element(counts.begin(), counts.end()) - counts.begin());
    }
  }
  return imp;
}

void Imputer::apply(RawTable& table) const {
  if (table.cells.cols() != Index(fill.size())) throw ShapeError("imputer: column count mismatch");
  for (Index r = 0; r < table.rows(); ++r)
    for (Index f = 0; f < table.cells.cols(); ++f)
      if (std::isnan(table.cells(r, f)) && !std::isnan(fill[std::size_t(f)]))
        table.cells(r, f) = fill[std::size_t(f)];
}

RawTable impute(RawTable table, const Schema& schema) {
  std::vector<Index> all(std::size_t(table.rows()));
  std::iota(all.begin(), all.end(), Index(0));
  Imputer::fit(table, schema, all).apply(table);
  return table;
}

// ---------------------------------------------------------------------------

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  Dataset out;
  out.schema = schema;
  out.layout = layout;
  out.columns = columns;
  out.x = x(rows, Eigen::all);
  for (Index r : rows) {
    out.labels.push_back(labels[std::size_t(r)]);
    if (!years.empty()) out.years.push_back(years[std::size_t(r)]);
  }
  return out;
}

Dataset encode_and_normalize(const RawTable& table, const Schema& schema) {
  schema.validate();
  if (table.cells.cols() != Index(schema.features.size()))
    throw ShapeError("table has " + std::to_string(table.cells.cols()) + " fields, schema " +
                     std::to_string(schema.features.size()));
  Dataset ds;
  ds.schema = schema;
  ds.layout = schema.layout();
  ds.columns = schema.columns();
  ds.x.resize(table.rows(), Index(ds.columns.size()));
  const Index label = schema.label_index();
  const auto year = schema.year_index();
  for (Index r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < ds.columns.size(); ++c) {
      const auto& col = ds.columns[c];
      const auto& spec = schema.features[std::size_t(col.feature)];
      const double v = table.cells(r, col.feature);
      if (std::isnan(v)) throw DataError("missing value in '" + spec.name + "'; impute first");
      double raw = v;
      if (col.category >= 0) raw = v == double(col.category) ? 1.0 : 0.0;
      if (raw < col.raw_min || raw > col.raw_max)
        throw DataError("value " + text::format_double(v) + " of '" + spec.name +
                        "' outside its declared range (row " + std::to_string(r) + ")");
      ds.x(r, Index(c)) = normalize_value(raw, col.raw_min, col.raw_max);
    }
    ds.labels.push_back(int(table.cells(r, label)));
    if (year) ds.years.push_back(int(table.cells(r, *year)));
  }
  return ds;
}

std::vector<std::string> correlated_features(const Dataset& dataset, double threshold) {
  const auto questions = dataset.schema.question_features();
  if (questions.size() < 2) throw DataError("correlation filter needs at least two features");
  std::vector<bool> dropped(questions.size(), false);
  std::vector<std::string> out;
  auto cols_of = [&](std::size_t q) {
    std::vector<Index> cols;
    for (std::size_t c = 0; c < dataset.columns.size(); ++c)
      if (dataset.columns[c].question == Index(q)) cols.push_back(Index(c));
    return cols;
  };
  auto correlated = [&](Index a, Index b) {
    try {
      return std::abs(constraints::pearson(dataset.x.col(a), dataset.x.col(b))) > threshold;
    } catch (const DataError&) {
      return false;  // constant column
    }
  };
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (dropped[i]) continue;
    const auto ci = cols_of(i);
    for (std::size_t j = i + 1; j < questions.size(); ++j) {
      if (dropped[j]) continue;
      const auto cj = cols_of(j);
      bool hit = false;
      for (Index a : ci)
        for (Index b : cj)
          if (!hit && correlated(a, b)) hit = true;
      if (hit) {
        dropped[j] = true;
        out.push_back(dataset.schema.features[std::size_t(questions[j])].name);
      }
    }
  }
  return out;
}

Dataset drop_features(const Dataset& dataset, const std::vector<std::string>& names) {
  for (const auto& n : names) {
    const auto f = dataset.schema.find(n);
    if (!f || !dataset.schema.features[std::size_t(*f)].is_question())
      throw DataError("cannot drop unknown feature '" + n + "'");
  }
  Dataset out;
  out.schema = dataset.schema.without(names);
  out.layout = out.schema.layout();
  out.columns = out.schema.columns();
  std::vector<Index> keep;
  for (const auto& c : out.columns) {
    for (std::size_t k = 0; k < dataset.columns.size(); ++k) {
      if (dataset.columns[k].name == c.name) {
        keep.push_back(Index(k));
        break;
      }
    }
  }
  out.x = dataset.x(Eigen::all, keep);
  out.labels = dataset.labels;
  out.years = dataset.years;
  return out;
}

DropResult drop_correlated(const Dataset& dataset, double threshold) {
  DropResult r;
  r.dropped = correlated_features(dataset, threshold);
  r.dataset = drop_features(dataset, r.dropped);
  return r;
}

Split temporal_split(const Dataset& dataset, const std::vector<int>& train_years,
                     const std::vector<int>& test_years) {
  if (dataset.years.empty()) throw DataError("temporal split needs a year field");
  if (train_years.empty() || test_years.empty())
    throw DataError("temporal split needs non-empty train and test year sets");
  const std::set<int> tr(train_years.begin(), train_years.end());
  const std::set<int> te(test_years.begin(), test_years.end());
  for (int y : te)
    if (tr.count(y)) throw DataError("year " + std::to_string(y) + " is in both train and test");
  std::vector<Index> a, b;
  Index excluded = 0;
  for (Index r = 0; r < dataset.rows(); ++r) {
    const int y = dataset.years[std::size_t(r)];
    if (tr.count(y)) {
      a.push_back(r);
    } else if (te.count(y)) {
      b.push_back(r);
    } else {
      ++excluded;
    }
  }
  return {dataset.subset(a), dataset.subset(b), excluded};
}

Prepared prepare(RawTable table, const Schema& schema, const PipelineConfig& config) {
  Prepared p;
  p.flagged_rows = table.drop_flagged();
  if (table.rows() == 0) throw DataError("no usable rows");

  std::vector<Index> train_rows, test_rows;
  if (const auto year = schema.year_index()) {
    const std::set<int> tr(config.train_years.begin(), config.train_years.end());
    const std::set<int> te(config.test_years.begin(), config.test_years.end());
    if (tr.empty() || te.empty())
      throw DataError("temporal split needs non-empty train and test year sets");
    for (int y : te)
      if (tr.count(y)) throw DataError("year " + std::to_string(y) + " is in both train and test");
    for (Index r = 0; r < table.rows(); ++r) {
      const int y = int(table.cells(r, *year));
      if (tr.count(y)) {
        train_rows.push_back(r);
      } else if (te.count(y)) {
        test_rows.push_back(r);
      } else {
        ++p.excluded_rows;
      }
    }
  } else {
    std::vector<Index> order(std::size_t(table.rows()));
    std::iota(order.begin(), order.end(), Index(0));
    std::mt19937_64 rng(config.seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_test = std::size_t(std::round(config.test_fraction * double(order.size())));
    test_rows.assign(order.begin(), order.begin() + std::ptrdiff_t(n_test));
    train_rows.assign(order.begin() + std::ptrdiff_t(n_test), order.end());
    std::sort(test_rows.begin(), test_rows.end());
    std::sort(train_rows.begin(), train_rows.end());
  }
  if (train_rows.empty()) throw DataError("training partition is empty");
  if (test_rows.empty()) throw DataError("test partition is empty");

  p.imputer = Imputer::fit(table, schema, train_rows);
  p.imputer.apply(table);
  const Dataset all = encode_and_normalize(table, schema);
  Dataset train = all.subset(train_rows);
  Dataset test = all.subset(test_rows);
  p.dropped = correlated_features(train, config.correlation_threshold);
  p.train = drop_features(train, p.dropped);
  p.test = drop_features(test, p.dropped);
  return p;
}

// ---------------------------------------------------------------------------

SynthData synth_generate(Index d, Index n, std::uint64_t seed, double difficulty) {
  if (d < 2) throw DataError("synthetic data needs at least two features");
  if (n < 1) throw DataError("synthetic data needs at least one row");
  if (!(difficulty >= 0.0)) throw DataError("difficulty must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  auto name_of = [](Index i) {
    std::string s = std::to_string(i);
    return "f" + std::string(s.size() < 2 ? 2 - s.size() : 0, '0') + s;
  };

  SynthData out;
  for (Index i = 0; i < d; ++i) {
    FeatureSpec f;
    f.name = name_of(i);
    if (i == 5) {
      f.kind = FeatureKind::Categorical;
      f.categories = {"a", "b", "c"};
    } else if (i % 3 == 2) {
      f.kind = FeatureKind::Categorical;
      f.categories = {"no", "yes"};
    } else {
      f.kind = FeatureKind::Continuous;
      f.raw_min = double((i * 7) % 20);
      f.raw_max = f.raw_min + 10.0 + double((i * 13) % 90);
    }
    if (f.kind == FeatureKind::Categorical) {
      f.raw_min = 0.0;
      f.raw_max = 1.0;
    }
    out.schema.features.push_back(std::move(f));
  }
  {
    FeatureSpec year;
    year.name = "year";
    year.year_field = true;
    out.schema.features.push_back(year);
    FeatureSpec label;
    label.name = "outcome";
    label.label = true;
    label.kind = FeatureKind::Categorical;
    label.categories = {"low", "high"};
    out.schema.features.push_back(label);
  }
  out.schema.validate();

  // Planted rule: f02 == yes implies f03 >= 60% of its range.
  const bool has_rule = d >= 4;
  const double rule_threshold =
      has_rule ? out.schema.features[3].raw_min +
                     0.6 * (out.schema.features[3].raw_max - out.schema.features[3].raw_min)
               : 0.0;
  constexpr double kRho = 0.92;
  std::uniform_int_distribution<int> year_dist(2005, 2011);

  // Per-feature categorical cut points.
  std::vector<double> cut(std::size_t(d), 0.0);
  for (Index i = 0; i < d; ++i) cut[std::size_t(i)] = 0.6 * (unif(rng) - 0.5);

  const Index cols = Index(d + 2);
  out.table.cells.resize(n, cols);
  Eigen::MatrixXd z(n, d);
  for (Index r = 0; r < n; ++r) {
    for (Index i = 0; i < d; ++i) z(r, i) = normal(rng);
    z(r, 1) = kRho * z(r, 0) + std::sqrt(1.0 - kRho * kRho) * z(r, 1);
  }
  for (Index r = 0; r < n; ++r) {
    for (Index i = 0; i < d; ++i) {
      const auto& f = out.schema.features[std::size_t(i)];
      double v;
      if (f.kind == FeatureKind::Continuous) {
        const double u = 1.0 / (1.0 + std::exp(-1.2 * z(r, i)));
        v = f.raw_min + u * (f.raw_max - f.raw_min);
      } else if (f.cardinality() == 3) {
        v = z(r, i) < -0.43 ? 0.0 : (z(r, i) < 0.43 ? 1.0 : 2.0);
      } else {
        v = z(r, i) > cut[std::size_t(i)] ? 1.0 : 0.0;
      }
      out.table.cells(r, i) = v;
    }
    if (has_rule && out.table.cells(r, 2) == 1.0) {
      const auto& f3 = out.schema.features[3];
      const double u = 1.0 / (1.0 + std::exp(-1.2 * z(r, 3)));
      out.table.cells(r, 3) = rule_threshold + u * (f3.raw_max - rule_threshold);
    }
    out.table.cells(r, d) = double(year_dist(rng));
  }

  // Sparse ground-truth weights over model columns. f01 duplicates f00 and is
  // left uninformative so the signal is not split across the pair.
  const auto columns = out.schema.columns();
  out.weights = Eigen::VectorXd::Zero(Index(columns.size()));
  std::vector<Index> candidates;
  for (Index i = 0; i < d; ++i)
    if (i != 1) candidates.push_back(i);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  const Index k = std::min<Index>(std::max<Index>(2, d / 10), Index(candidates.size()));
  std::vector<Index> informative(candidates.begin(), candidates.begin() + k);
  for (Index j = 0; j < k; ++j) {
    const Index fi = informative[std::size_t(j)];
    const double magnitude = 2.0 * std::pow(0.75, double(j));
    const double sign = unif(rng) < 0.5 ? -1.0 : 1.0;
    out.informative.push_back(out.schema.features[std::size_t(fi)].name);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (columns[c].feature != fi) continue;
      // One-hot groups get a contrast on their first category.
      out.weights(Index(c)) = columns[c].category <= 0 ? sign * magnitude : 0.0;
    }
  }

  // Labels: logistic noise scaled by difficulty on the normalized score.
  Eigen::VectorXd score(n);
  for (Index r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto& col = columns[c];
      double raw = out.table.cells(r, col.feature);
      if (col.category >= 0) raw = raw == double(col.category) ? 1.0 : 0.0;
      s += out.weights(Index(c)) * normalize_value(raw, col.raw_min, col.raw_max);
    }
    score(r) = s;
  }
  const double centre = [&] {
    std::vector<double> v(score.data(), score.data() + n);
    std::nth_element(v.begin(), v.begin() + std::ptrdiff_t(v.size() / 2), v.end());
    return v[v.size() / 2];
  }();
  for (Index r = 0; r < n; ++r) {
    const double u = std::clamp(unif(rng), 1e-12, 1.0 - 1e-12);
    const double noise = std::log(u / (1.0 - u));
    out.table.cells(r, d + 1) = score(r) - centre + difficulty * noise > 0.0 ? 1.0 : 0.0;
  }
  for (Index r = 0; r < n; ++r) out.table.source_lines.push_back(std::size_t(r + 2));

  // Reference catalog matching the planted structure.
  std::ostringstream cat;
  cat << "# Reference constraint catalog for the synthetic schema.\n[bounds]\n";
  for (const auto& c : columns)
    cat << c.name << ' ' << text::format_double(c.raw_min) << ' '
        << text::format_double(c.raw_max) << '\n';
  cat << "\n[correlations]\n";
  {
    double rho = 1.0;
    try {
      rho = constraints::pearson(out.table.cells.col(0), out.table.cells.col(1));
    } catch (const DataError&) {
    }
    cat << "f00 f01 pearson " << text::fixed(rho, 3) << " 0.1\n";
  }
  cat << "\n[rules]\n";
  if (has_rule) {
    const std::string t = text::format_double(rule_threshold);
    cat << "rule planted_f02_f03 category=conditional: if f02 == 1 then f03 >= " << t
        << " repair clamp f03 >= " << t << '\n';
  }
  out.catalog_text = cat.str();
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'Q', 'A', 'D', 'V', 'D', 'S', '0', '1'};

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw DataError("dataset cache is truncated");
  return v;
}

}  // namespace

void save_cache(const Dataset& dataset, const std::filesystem::path& path) {
  std::ostringstream os(std::ios::binary);
  os.write(kMagic, sizeof kMagic);
  const std::string schema = dataset.schema.to_text();
  put<std::uint64_t>(os, schema.size());
  os.write(schema.data(), std::streamsize(schema.size()));
  put<std::uint64_t>(os, std::uint64_t(dataset.rows()));
  put<std::uint64_t>(os, std::uint64_t(dataset.cols()));
  for (Index r = 0; r < dataset.rows(); ++r)
    for (Index c = 0; c < dataset.cols(); ++c) put<double>(os, dataset.x(r, c));
  for (int l : dataset.labels) put<std::int32_t>(os, l);
  put<std::uint8_t>(os, dataset.years.empty() ? 0 : 1);
  for (int y : dataset.years) put<std::int32_t>(os, y);
  text::write_file(path, os.str());
}

Dataset load_cache(const std::filesystem::path& path) {
  const std::string bytes = text::read_file(path);
  std::istringstream is(bytes, std::ios::binary);
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw DataError(path.string() + ": not a dataset cache");
  const auto schema_len = get<std::uint64_t>(is);
  if (schema_len > bytes.size()) throw DataError("dataset cache is truncated");
  std::string schema_text(schema_len, '\0');
  is.read(schema_text.data(), std::streamsize(schema_len));
  Dataset ds;
  ds.schema = Schema::parse(schema_text, path.string());
  ds.layout = ds.schema.layout();
  ds.columns = ds.schema.columns();
  const auto rows = Index(get<std::uint64_t>(is));
  const auto cols = Index(get<std::uint64_t>(is));
  if (cols != Index(ds.columns.size())) throw DataError("dataset cache column count mismatch");
  ds.x.resize(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) ds.x(r, c) = get<double>(is);
  for (Index r = 0; r < rows; ++r) ds.labels.push_back(get<std::int32_t>(is));
  if (get<std::uint8_t>(is))
    for (Index r = 0; r < rows; ++r) ds.years.push_back(get<std::int32_t>(is));
  return ds;
}

}  // namespace qadv::data
