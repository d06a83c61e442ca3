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

// Predicate and arithmetic expressions over raw record columns, used by the
// constraint catalog. Grammar:
//
//   predicate := conj ('or' conj)*
//   conj      := unary ('and' unary)*
//   unary     := 'not' unary | 'true' | '(' predicate ')' | arith CMP arith
//   arith     := term (('+' | '-') term)*
//   term      := factor (('*' | '/') factor)*
//   factor    := NUMBER | COLUMN | 'orig' '(' COLUMN ')' | '(' arith ')' | '-' factor
//   CMP       := '<' | '<=' | '>' | '>=' | '==' | '!='
//
// Column names may contain letters, digits, '_', '.' and interior '-'
// ("age-p"); write binary minus with surrounding spaces. orig(c) reads the
// clean record, which equals the evaluated record outside repair.
// Comparisons treat values within a relative 1e-9 as equal so that records
// survive the normalized-space round trip unchanged.

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qadv/error.hpp"

namespace qadv::constraints {

using Eigen::Index;

struct Arith;
struct Expr;
using ArithPtr = std::shared_ptr<const Arith>;
using ExprPtr = std::shared_ptr<const Expr>;

struct Arith {
  enum class Op { Number, Column, Orig, Add, Sub, Mul, Div, Neg };
  Op op = Op::Number;
  double value = 0.0;
  Index column = -1;
  ArithPtr lhs, rhs;

  double eval(const Eigen::VectorXd& x, const Eigen::VectorXd& orig) const;
  void collect_columns(std::vector<Index>& out) const;
};

enum class CmpOp { Lt, Le, Gt, Ge, Eq, Ne };

struct Expr {
  enum class Op { Compare, And, Or, Not, True };
  Op op = Op::True;
  CmpOp cmp = CmpOp::Eq;
  ArithPtr lhs, rhs;
  ExprPtr a, b;

  bool eval(const Eigen::VectorXd& x, const Eigen::VectorXd& orig) const;
  void collect_columns(std::vector<Index>& out) const;
};

struct Token {
  enum class Kind { Number, Ident, Symbol, End };
  Kind kind = Kind::End;
  std::string text;
  double number = 0.0;
};

std::vector<Token> lex(std::string_view text, const std::string& source, std::size_t line);

/// Raised when an expression names a column that is not in the bound set.
struct UnknownColumn : ParseError {
  UnknownColumn(const std::string& source, std::size_t line, std::string name)
      : ParseError(source, line, "unknown column '" + name + "'"), column(std::move(name)) {}
  std::string column;
};

using ColumnResolver = std::function<std::optional<Index>(const std::string&)>;

/// Recursive-descent parser over a token range.
class ExprParser {
 public:
  ExprParser(std::vector<Token> tokens, ColumnResolver resolve, std::string source,
             std::size_t line);

  ExprPtr predicate();
  ArithPtr arith();
  Index column_ref();

  const Token& peek() const { return tokens_[pos_]; }
  bool at_end() const { return tokens_[pos_].kind == Token::Kind::End; }
  bool accept_symbol(std::string_view s);
  bool accept_word(std::string_view w);
  void expect_symbol(std::string_view s);
  [[noreturn]] void fail(const std::string& what) const;

 private:
  ExprPtr conj();
  ExprPtr unary();
  ExprPtr comparison();
  ArithPtr term();
  ArithPtr factor();

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  ColumnResolver resolve_;
  std::string source_;
  std::size_t line_;
};

}  // namespace qadv::constraints
