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

#include "qadv/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <charconv>

namespace qadv::constraints {

double Arith::eval(const Eigen::VectorXd& x, const Eigen::VectorXd& orig) const {
  switch (op) {
    case Op::Number:
      return value;
    case Op::Column:
      return x(column);
    case Op::Orig:
      return orig(column);
    case Op::Add:
      return lhs->eval(x, orig) + rhs->eval(x, orig);
    case Op::Sub:
      return lhs->eval(x, orig) - rhs->eval(x, orig);
    case Op::Mul:
      return lhs->eval(x, orig) * rhs->eval(x, orig);
    case Op::Div:
      return lhs->eval(x, orig) / rhs->eval(x, orig);
    case Op::Neg:
      return -lhs->eval(x, orig);
  }
  return 0.0;
}

void Arith::collect_columns(std::vector<Index>& out) const {
  if (op == Op::Column) out.push_back(column);
  if (lhs) lhs->collect_columns(out);
  if (rhs) rhs->collect_columns(out);
}

bool Expr::eval(const Eigen::VectorXd& x, const Eigen::VectorXd& orig) const {
  switch (op) {
    case Op::True:
      return true;
    case Op::Not:
      return !a->eval(x, orig);
    case Op::And:
      return a->eval(x, orig) && b->eval(x, orig);
    case Op::Or:
      return a->eval(x, orig) || b->eval(x, orig);
    case Op::Compare: {
      const double l = lhs->eval(x, orig);
      const double r = rhs->eval(x, orig);
      const double tol = 1e-9 * std::max({1.0, std::abs(l), std::abs(r)});
      switch (cmp) {
        case CmpOp::Lt: return l < r - tol;
        case CmpOp::Le: return l <= r + tol;
        case CmpOp::Gt: return l > r + tol;
        case CmpOp::Ge: return l >= r - tol;
        case CmpOp::Eq: return std::abs(l - r) <= tol;
        case CmpOp::Ne: return std::abs(l - r) > tol;
      }
    }
  }
  return false;
}

void Expr::collect_columns(std::vector<Index>& out) const {
  if (lhs) lhs->collect_columns(out);
  if (rhs) rhs->collect_columns(out);
  if (a) a->collect_columns(out);
  if (b) b->collect_columns(out);
}

// ---------------------------------------------------------------------------

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

}  // namespace

std::vector<Token> lex(std::string_view text, const std::string& source, std::size_t line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == ' ' || c == '\t') {
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      Token t;
      t.kind = Token::Kind::Number;
      const auto res = std::from_chars(text.data() + i, text.data() + text.size(), t.number);
      if (res.ec != std::errc()) throw ParseError(source, line, "bad number");
      const auto len = std::size_t(res.ptr - (text.data() + i));
      t.text = std::string(text.substr(i, len));
      i += len;
      out.push_back(std::move(t));
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i + 1;
      while (j < text.size()) {
        if (ident_char(text[j])) {
          ++j;
        } else if (text[j] == '-' && j + 1 < text.size() && ident_char(text[j + 1])) {
          j += 2;
        } else {
          break;
        }
      }
      out.push_back({Token::Kind::Ident, std::string(text.substr(i, j - i)), 0.0});
      i = j;
      continue;
    }
    static constexpr std::string_view two[] = {"<=", ">=", "==", "!="};
    bool matched = false;
    for (auto s : two) {
      if (text.substr(i, 2) == s) {
        out.push_back({Token::Kind::Symbol, std::string(s), 0.0});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string_view("<>+-*/()=,[]").find(c) != std::string_view::npos) {
      out.push_back({Token::Kind::Symbol, std::string(1, c), 0.0});
      ++i;
      continue;
    }
    throw ParseError(source, line, std::string("unexpected character '") + c + "'");
  }
  out.push_back({Token::Kind::End, "", 0.0});
  return out;
}

ExprParser::ExprParser(std::vector<Token> tokens, ColumnResolver resolve, std::string source,
                       std::size_t line)
    : tokens_(std::move(tokens)), resolve_(std::move(resolve)), source_(std::move(source)),
      line_(line) {
  if (tokens_.empty() || tokens_.back().kind != Token::Kind::End)
    tokens_.push_back({Token::Kind::End, "", 0.0});
}

void ExprParser::fail(const std::string& what) const {
  const auto& t = peek();
  throw ParseError(source_, line_,
                   what + (t.kind == Token::Kind::End ? " at end of line" : " near '" + t.text + "'"));
}

bool ExprParser::accept_symbol(std::string_view s) {
  if (peek().kind == Token::Kind::Symbol && peek().text == s) {
    ++pos_;
    return true;
  }
  return false;
}

bool ExprParser::accept_word(std::string_view w) {
  if (peek().kind == Token::Kind::Ident && peek().text == w) {
    ++pos_;
    return true;
  }
  return false;
}

void ExprParser::expect_symbol(std::string_view s) {
  if (!accept_symbol(s)) fail("expected '" + std::string(s) + "'");
}

Index ExprParser::column_ref() {
  if (peek().kind != Token::Kind::Ident) fail("expected a column name");
  const std::string name = tokens_[pos_++].text;
  const auto idx = resolve_(name);
  if (!idx) throw UnknownColumn(source_, line_, name);
  return *idx;
}

ExprPtr ExprParser::predicate() {
  auto lhs = conj();
  while (accept_word("or")) {
    auto e = std::make_shared<Expr>();
    e->op = Expr::Op::Or;
    e->a = lhs;
    e->b = conj();
    lhs = e;
  }
  return lhs;
}

ExprPtr ExprParser::conj() {
  auto lhs = unary();
  while (accept_word("and")) {
    auto e = std::make_shared<Expr>();
    e->op = Expr::Op::And;
    e->a = lhs;
    e->b = unary();
    lhs = e;
  }
  return lhs;
}

ExprPtr ExprParser::unary() {
  if (accept_word("not")) {
    auto e = std::make_shared<Expr>();
    e->op = Expr::Op::Not;
    e->a = unary();
    return e;
  }
  if (accept_word("true")) return std::make_shared<Expr>();
  if (peek().kind == Token::Kind::Symbol && peek().text == "(") {
    // Either a parenthesised predicate or the start of an arithmetic operand.
    const auto saved = pos_;
    try {
      ++pos_;
      auto inner = predicate();
      expect_symbol(")");
      static constexpr std::string_view cmp_ops[] = {"<", "<=", ">", ">=", "==", "!=",
                                                     "+", "-",  "*", "/"};
      bool followed_by_operator = false;
      for (auto op : cmp_ops)
        if (peek().kind == Token::Kind::Symbol && peek().text == op) followed_by_operator = true;
      if (!followed_by_operator) return inner;
    } catch (const UnknownColumn&) {
      throw;
    } catch (const ParseError&) {
    }
    pos_ = saved;
  }
  return comparison();
}

ExprPtr ExprParser::comparison() {
  auto e = std::make_shared<Expr>();
  e->op = Expr::Op::Compare;
  e->lhs = arith();
  static const std::pair<std::string_view, CmpOp> ops[] = {
      {"<=", CmpOp::Le}, {">=", CmpOp::Ge}, {"==", CmpOp::Eq},
      {"!=", CmpOp::Ne}, {"<", CmpOp::Lt},  {">", CmpOp::Gt}};
  bool found = false;
  for (const auto& [sym, op] : ops) {
    if (accept_symbol(sym)) {
      e->cmp = op;
      found = true;
      break;
    }
  }
  if (!found) fail("expected a comparison operator");
  e->rhs = arith();
  return e;
}

ArithPtr ExprParser::arith() {
  auto lhs = term();
  for (;;) {
    Arith::Op op;
    if (accept_symbol("+")) {
      op = Arith::Op::Add;
    } else if (accept_symbol("-")) {
      op = Arith::Op::Sub;
    } else {
      return lhs;
    }
    auto a = std::make_shared<Arith>();
    a->op = op;
    a->lhs = lhs;
    a->rhs = term();
    lhs = a;
  }
}

ArithPtr ExprParser::term() {
  auto lhs = factor();
  for (;;) {
    Arith::Op op;
    if (accept_symbol("*")) {
      op = Arith::Op::Mul;
    } else if (accept_symbol("/")) {
      op = Arith::Op::Div;
    } else {
      return lhs;
    }
    auto a = std::make_shared<Arith>();
    a->op = op;
    a->lhs = lhs;
    a->rhs = factor();
    lhs = a;
  }
}

ArithPtr ExprParser::factor() {
  auto a = std::make_shared<Arith>();
  if (peek().kind == Token::Kind::Number) {
    a->op = Arith::Op::Number;
    a->value = tokens_[pos_++].number;
    return a;
  }
  if (accept_symbol("-")) {
    a->op = Arith::Op::Neg;
    a->lhs = factor();
    return a;
  }
  if (accept_symbol("(")) {
    auto inner = arith();
    expect_symbol(")");
    return inner;
  }
  if (peek().kind == Token::Kind::Ident && peek().text == "orig" &&
      tokens_[pos_ + 1].kind == Token::Kind::Symbol && tokens_[pos_ + 1].text == "(") {
    pos_ += 2;
    a->op = Arith::Op::Orig;
    a->column = column_ref();
    expect_symbol(")");
    return a;
  }
  if (peek().kind == Token::Kind::Ident) {
    static constexpr std::string_view reserved[] = {"and", "or", "not", "then", "repair", "if"};
    for (auto r : reserved)
      if (peek().text == r) fail("expected an operand");
    a->op = Arith::Op::Column;
    a->column = column_ref();
    return a;
  }
  fail("expected an operand");
}

}  // namespace qadv::constraints
