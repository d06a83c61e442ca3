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

#include "qadv/schema.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include "qadv/error.hpp"
#include "qadv/text_format.hpp"

namespace qadv {

namespace {

double parse_number(const std::string& tok, const std::string& source, std::size_t line) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  const auto res = std::from_chars(tok.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw ParseError(source, line, "expected a number, got '" + tok + "'");
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(text::trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(text::trim(cur));
  return out;
}

std::string join_list(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

}  // namespace

std::optional<Index> FeatureSpec::category_index(std::string_view token) const {
  for (std::size_t i = 0; i < categories.size(); ++i)
    if (categories[i] == token) return Index(i);
  return std::nullopt;
}

Eigen::VectorXd QuestionLayout::column_mask(const std::vector<bool>& asked) const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(columns);
  for (Index q = 0; q < questions(); ++q)
    if (asked[std::size_t(q)]) m.segment(offset[std::size_t(q)], width[std::size_t(q)]).setOnes();
  return m;
}

QuestionLayout QuestionLayout::identity(Index d) {
  QuestionLayout l;
  for (Index i = 0; i < d; ++i) {
    l.offset.push_back(i);
    l.width.push_back(1);
  }
  l.columns = d;
  return l;
}

Schema Schema::parse(std::string_view text, const std::string& source) {
  Schema schema;
  for (const auto& line : text::read_sections(text, source, {"features"})) {
    auto tok = text::tokenize(line.content, source, line.number);
    if (tok.size() < 2) throw ParseError(source, line.number, "expected '<name> <kind> ...'");
    FeatureSpec f;
    f.name = tok[0];
    const std::string& kind = tok[1];
    std::size_t next = 2;
    if (kind == "continuous") {
      if (tok.size() < 4) throw ParseError(source, line.number, "continuous needs <min> <max>");
      f.kind = FeatureKind::Continuous;
      f.raw_min = parse_number(tok[2], source, line.number);
      f.raw_max = parse_number(tok[3], source, line.number);
      if (!(f.raw_min < f.raw_max))
        throw ParseError(source, line.number, "zero-width or inverted range for " + f.name);
      next = 4;
    } else if (kind == "categorical") {
      if (tok.size() < 3) throw ParseError(source, line.number, "categorical needs a category list");
      f.kind = FeatureKind::Categorical;
      f.categories = split_list(tok[2]);
      if (f.categories.size() < 2)
        throw ParseError(source, line.number, "categorical needs at least two categories");
      f.raw_min = 0.0;
      f.raw_max = 1.0;
      next = 3;
    } else if (kind == "year") {
      f.year_field = true;
    } else if (kind == "label") {
      f.label = true;
      f.kind = FeatureKind::Categorical;
      f.categories = {"0", "1"};
      if (tok.size() >= 3 && tok[2].find('=') == std::string::npos) {
        f.categories = split_list(tok[2]);
        next = 3;
        if (f.categories.size() != 2)
          throw ParseError(source, line.number, "label must have exactly two classes");
      }
    } else {
      throw ParseError(source, line.number, "unknown feature kind '" + kind + "'");
    }
    for (; next < tok.size(); ++next) {
      const auto eq = tok[next].find('=');
      if (eq == std::string::npos)
        throw ParseError(source, line.number, "expected key=value, got '" + tok[next] + "'");
      const auto key = tok[next].substr(0, eq);
      const auto value = tok[next].substr(eq + 1);
      if (key == "units") {
        f.units = value;
      } else if (key == "desc") {
        f.description = value;
      } else {
        throw ParseError(source, line.number, "unknown attribute '" + key + "'");
      }
    }
    schema.features.push_back(std::move(f));
  }
  try {
    schema.validate();
  } catch (const DataError& e) {
    throw ParseError(source, 0, e.what());
  }
  return schema;
}

Schema Schema::load(const std::filesystem::path& path) {
  return parse(text::read_file(path), path.string());
}

std::string Schema::to_text() const {
  std::ostringstream out;
  out << "[features]\n";
  for (const auto& f : features) {
    out << f.name << ' ';
    if (f.label) {
      out << "label " << join_list(f.categories);
    } else if (f.year_field) {
      out << "year";
    } else if (f.kind == FeatureKind::Continuous) {
      out << "continuous " << text::format_double(f.raw_min) << ' '
          << text::format_double(f.raw_max);
    } else {
      out << "categorical " << join_list(f.categories);
    }
    if (!f.units.empty()) out << " units=" << f.units;
    if (!f.description.empty()) out << " desc=\"" << f.description << '"';
    out << '\n';
  }
  return out.str();
}

void Schema::validate() const {
  std::set<std::string> names;
  int labels = 0, years = 0;
  for (const auto& f : features) {
    if (f.name.empty()) throw DataError("feature with empty name");
    if (!names.insert(f.name).second) throw DataError("duplicate feature name '" + f.name + "'");
    labels += f.label ? 1 : 0;
    years += f.year_field ? 1 : 0;
    if (f.is_question() && f.kind == FeatureKind::Continuous && !(f.raw_min < f.raw_max))
      throw DataError("zero-width range for '" + f.name + "'");
    if (f.kind == FeatureKind::Categorical) {
      std::set<std::string> cats(f.categories.begin(), f.categories.end());
      if (cats.size() != f.categories.size())
        throw DataError("duplicate category in '" + f.name + "'");
    }
  }
  if (labels != 1) throw DataError("schema must declare exactly one label feature");
  if (years > 1) throw DataError("schema may declare at most one year field");
  if (question_features().empty()) throw DataError("schema has no question features");
}

std::optional<Index> Schema::find(std::string_view name) const {
  for (std::size_t i = 0; i < features.size(); ++i)
    if (features[i].name == name) return Index(i);
  return std::nullopt;
}

Index Schema::label_index() const {
  for (std::size_t i = 0; i < features.size(); ++i)
    if (features[i].label) return Index(i);
  throw DataError("schema has no label");
}

std::optional<Index> Schema::year_index() const {
  for (std::size_t i = 0; i < features.size(); ++i)
    if (features[i].year_field) return Index(i);
  return std::nullopt;
}

std::vector<Index> Schema::question_features() const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < features.size(); ++i)
    if (features[i].is_question()) out.push_back(Index(i));
  return out;
}

std::vector<Column> Schema::columns() const {
  std::vector<Column> out;
  Index q = 0;
  for (Index fi : question_features()) {
    const auto& f = features[std::size_t(fi)];
    if (f.kind == FeatureKind::Continuous) {
      out.push_back({f.name, fi, q, -1, f.raw_min, f.raw_max});
    } else if (f.width() == 1) {
      out.push_back({f.name, fi, q, -1, 0.0, 1.0});
    } else {
      for (Index c = 0; c < f.cardinality(); ++c)
        out.push_back({f.name + "." + f.categories[std::size_t(c)], fi, q, c, 0.0, 1.0});
    }
    ++q;
  }
  return out;
}

std::vector<std::string> Schema::column_names() const {
  std::vector<std::string> out;
  for (const auto& c : columns()) out.push_back(c.name);
  return out;
}

QuestionLayout Schema::layout() const {
  QuestionLayout l;
  for (Index fi : question_features()) {
    l.offset.push_back(l.columns);
    l.width.push_back(features[std::size_t(fi)].width());
    l.columns += features[std::size_t(fi)].width();
  }
  return l;
}

Schema Schema::without(const std::vector<std::string>& feature_names) const {
  Schema out;
  for (const auto& f : features) {
    const bool drop =
        f.is_question() &&
        std::find(feature_names.begin(), feature_names.end(), f.name) != feature_names.end();
    if (!drop) out.features.push_back(f);
  }
  return out;
}

}  // namespace qadv
