#pragma once

// Arithmetic expression parser/evaluator for coefficients and manufactured
// solutions. Grammar (precedence low to high):
//
//   expr    := term (('+'|'-') term)*
//   term    := unary (('*'|'/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?         (right associative)
//   primary := number | 'pi' | 'x1' | 'x2' | name '(' expr ')' | '(' expr ')'
//
// '^' is exponentiation and binds tighter than unary minus, so "-x1^2"
// means -(x1^2). No implicit multiplication. Errors carry a 0-based
// character offset into the source string.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvd/geometry.hpp"

namespace mvd {

class ExprError : public std::runtime_error {
 public:
  ExprError(const std::string& msg, std::size_t position)
      : std::runtime_error(msg + " (at offset " + std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& msg, std::size_t position)
      : std::runtime_error(msg + " (subexpression at offset " +
                           std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class Expr {
 public:
  double eval(Point2 p) const { return eval_node(root_, p); }

  std::string to_string() const { return print(root_, 0); }

  static Expr parse(const std::string& text);

 private:
  enum class Kind { Number, Var1, Var2, Pi, Neg, Add, Sub, Mul, Div, Pow, Call };
  enum class Func { Sin, Cos, Exp, Sqrt, Abs };

  struct Node {
    Kind kind;
    double number = 0.0;
    Func func = Func::Sin;
    int lhs = -1;
    int rhs = -1;
    std::size_t pos = 0;
  };

  std::vector<Node> nodes_;
  int root_ = -1;

  double eval_node(int id, Point2 p) const {
    const Node& n = nodes_[id];
    switch (n.kind) {
      case Kind::Number: return n.number;
      case Kind::Var1: return p.x;
      case Kind::Var2: return p.y;
      case Kind::Pi: return M_PI;
      case Kind::Neg: return -eval_node(n.lhs, p);
      case Kind::Add: return eval_node(n.lhs, p) + eval_node(n.rhs, p);
      case Kind::Sub: return eval_node(n.lhs, p) - eval_node(n.rhs, p);
      case Kind::Mul: return eval_node(n.lhs, p) * eval_node(n.rhs, p);
      case Kind::Div: {
        const double den = eval_node(n.rhs, p);
        if (den == 0.0) throw EvalError("division by zero", n.pos);
        return eval_node(n.lhs, p) / den;
      }
      case Kind::Pow:
        return std::pow(eval_node(n.lhs, p), eval_node(n.rhs, p));
      case Kind::Call: {
        const double a = eval_node(n.lhs, p);
        switch (n.func) {
          case Func::Sin: return std::sin(a);
          case Func::Cos: return std::cos(a);
          case Func::Exp: return std::exp(a);
          case Func::Sqrt:
            if (a < 0.0) throw EvalError("sqrt of negative value", n.pos);
            return std::sqrt(a);
          case Func::Abs: return std::abs(a);
        }
        break;
      }
    }
    throw EvalError("corrupt expression tree", n.pos);
  }

  // Precedence levels for printing: 0 add, 1 mul, 2 unary, 3 pow, 4 atom.
  int level(int id) const {
    switch (nodes_[id].kind) {
      case Kind::Add:
      case Kind::Sub: return 0;
      case Kind::Mul:
      case Kind::Div: return 1;
      case Kind::Neg: return 2;
      case Kind::Pow: return 3;
      default: return 4;
    }
  }

  std::string print(int id, int parent_level) const {
    const Node& n = nodes_[id];
    std::string s;
    switch (n.kind) {
      case Kind::Number: {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", n.number);
        s = buf;
        break;
      }
      case Kind::Var1: s = "x1"; break;
      case Kind::Var2: s = "x2"; break;
      case Kind::Pi: s = "pi"; break;
      case Kind::Neg: s = "-" + print(n.lhs, 2); break;
      case Kind::Add: s = print(n.lhs, 0) + " + " + print(n.rhs, 1); break;
      case Kind::Sub: s = print(n.lhs, 0) + " - " + print(n.rhs, 1); break;
      case Kind::Mul: s = print(n.lhs, 1) + "*" + print(n.rhs, 2); break;
      case Kind::Div: s = print(n.lhs, 1) + "/" + print(n.rhs, 2); break;
      case Kind::Pow: s = print(n.lhs, 4) + "^" + print(n.rhs, 3); break;
      case Kind::Call: {
        const char* names[] = {"sin", "cos", "exp", "sqrt", "abs"};
        s = std::string(names[static_cast<int>(n.func)]) + "(" +
            print(n.lhs, 0) + ")";
        break;
      }
    }
    if (level(id) < parent_level) return "(" + s + ")";
    return s;
  }

  friend class ExprParser;
};

class ExprParser {
 public:
  explicit ExprParser(const std::string& text) : src_(text) {}

  Expr run() {
    Expr e;
    out_ = &e;
    pos_ = 0;
    const int root = parse_expr();
    skip_ws();
    if (pos_ != src_.size())
      throw ExprError("trailing characters after expression", pos_);
    e.root_ = root;
    out_ = nullptr;
    return e;
  }

 private:
  const std::string& src_;
  std::size_t pos_ = 0;
  Expr* out_ = nullptr;

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < src_.size() && src_[pos_] == c;
  }

  bool accept(char c) {
    if (peek(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  int add(Expr::Node n) {
    out_->nodes_.push_back(n);
    return static_cast<int>(out_->nodes_.size()) - 1;
  }

  int parse_expr() {
    int lhs = parse_term();
    for (;;) {
      skip_ws();
      const std::size_t at = pos_;
      if (accept('+')) {
        const int rhs = parse_term();
        lhs = add({Expr::Kind::Add, 0, Expr::Func::Sin, lhs, rhs, at});
      } else if (accept('-')) {
        const int rhs = parse_term();
        lhs = add({Expr::Kind::Sub, 0, Expr::Func::Sin, lhs, rhs, at});
      } else {
        return lhs;
      }
    }
  }

  int parse_term() {
    int lhs = parse_unary();
    for (;;) {
      skip_ws();
      const std::size_t at = pos_;
      if (accept('*')) {
        const int rhs = parse_unary();
        lhs = add({Expr::Kind::Mul, 0, Expr::Func::Sin, lhs, rhs, at});
      } else if (accept('/')) {
        const int rhs = parse_unary();
        lhs = add({Expr::Kind::Div, 0, Expr::Func::Sin, lhs, rhs, at});
      } else {
        return lhs;
      }
    }
  }

  int parse_unary() {
    skip_ws();
    const std::size_t at = pos_;
    if (accept('-')) {
      const int sub = parse_unary();
      return add({Expr::Kind::Neg, 0, Expr::Func::Sin, sub, -1, at});
    }
    return parse_power();
  }

  int parse_power() {
    const int base = parse_primary();
    skip_ws();
    const std::size_t at = pos_;
    if (accept('^')) {
      const int exponent = parse_unary();  // right associative, allows 2^-3
      return add({Expr::Kind::Pow, 0, Expr::Func::Sin, base, exponent, at});
    }
    return base;
  }

  int parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw ExprError("unexpected end of expression", pos_);
    const std::size_t at = pos_;
    const char c = src_[pos_];

    if (c == '(') {
      ++pos_;
      const int inner = parse_expr();
      if (!accept(')')) throw ExprError("unbalanced parentheses", pos_);
      return inner;
    }

    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return parse_number();

    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t end = pos_;
      while (end < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_'))
        ++end;
      const std::string name = src_.substr(pos_, end - pos_);
      pos_ = end;
      if (name == "x1") return add({Expr::Kind::Var1, 0, Expr::Func::Sin, -1, -1, at});
      if (name == "x2") return add({Expr::Kind::Var2, 0, Expr::Func::Sin, -1, -1, at});
      if (name == "pi") return add({Expr::Kind::Pi, 0, Expr::Func::Sin, -1, -1, at});
      Expr::Func f;
      if (name == "sin") f = Expr::Func::Sin;
      else if (name == "cos") f = Expr::Func::Cos;
      else if (name == "exp") f = Expr::Func::Exp;
      else if (name == "sqrt") f = Expr::Func::Sqrt;
      else if (name == "abs") f = Expr::Func::Abs;
      else throw ExprError("unknown identifier '" + name + "'", at);
      if (!accept('(')) throw ExprError("expected '(' after function name", pos_);
      const int arg = parse_expr();
      if (!accept(')')) throw ExprError("unbalanced parentheses", pos_);
      return add({Expr::Kind::Call, 0, f, arg, -1, at});
    }

    throw ExprError(std::string("unexpected character '") + c + "'", at);
  }

  int parse_number() {
    const std::size_t at = pos_;
    std::size_t end = pos_;
    while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end])))
      ++end;
    if (end < src_.size() && src_[end] == '.') {
      ++end;
      while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end])))
        ++end;
    }
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      std::size_t e = end + 1;
      if (e < src_.size() && (src_[e] == '+' || src_[e] == '-')) ++e;
      if (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) {
        ++e;
        while (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e])))
          ++e;
        end = e;
      }
    }
    const std::string tok = src_.substr(at, end - at);
    if (tok.empty() || tok == ".") throw ExprError("malformed number", at);
    char* tail = nullptr;
    const double v = std::strtod(tok.c_str(), &tail);
    if (tail == nullptr || *tail != '\0') throw ExprError("malformed number", at);
    pos_ = end;
    return add({Expr::Kind::Number, v, Expr::Func::Sin, -1, -1, at});
  }
};

inline Expr Expr::parse(const std::string& text) { return ExprParser(text).run(); }

inline Expr parse_expr(const std::string& text) { return Expr::parse(text); }

}  // namespace mvd
