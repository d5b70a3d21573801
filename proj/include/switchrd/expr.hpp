#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <string>
#include <string_view>

#include "switchrd/common.hpp"

namespace switchrd {

// Initial-data expressions: sums/products/integer powers of numbers, x, pi,
// cos(...) and sin(...). Exactly enough for profiles like "2*cos(pi*x)+2"
// and "5*sin(pi*x)^2" without evaluating arbitrary code from configs.
class Expression {
  struct Node;
  using NodePtr = std::unique_ptr<Node>;

  enum class Op { number, var_x, add, sub, mul, neg, pow_int, cos_fn, sin_fn };

  struct Node {
    Op op;
    double value = 0;  // number literal or integer exponent
    NodePtr lhs, rhs;

    double eval(double x) const {
      switch (op) {
        case Op::number: return value;
        case Op::var_x: return x;
        case Op::add: return lhs->eval(x) + rhs->eval(x);
        case Op::sub: return lhs->eval(x) - rhs->eval(x);
        case Op::mul: return lhs->eval(x) * rhs->eval(x);
        case Op::neg: return -lhs->eval(x);
        case Op::pow_int: {
          double base = lhs->eval(x);
          double out = 1.0;
          for (int i = 0; i < static_cast<int>(value); ++i) out *= base;
          return out;
        }
        case Op::cos_fn: return std::cos(lhs->eval(x));
        case Op::sin_fn: return std::sin(lhs->eval(x));
      }
      return 0;
    }
  };

 public:
  static Expression parse(std::string_view text) {
    Parser p{text, 0};
    Expression e;
    e.root_ = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) {
      throw config_error("initial-data expression: unexpected trailing input at '" +
                         std::string(text.substr(p.pos)) + "'");
    }
    return e;
  }

  double operator()(double x) const { return root_->eval(x); }

 private:
  Expression() = default;

  struct Parser {
    std::string_view text;
    std::size_t pos;

    void skip_ws() {
      while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool consume(char c) {
      skip_ws();
      if (pos < text.size() && text[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    [[noreturn]] void fail(const std::string& what) {
      throw config_error("initial-data expression: " + what + " at position " +
                         std::to_string(pos) + " of '" + std::string(text) + "'");
    }

    NodePtr parse_expr() {
      NodePtr node = parse_term();
      for (;;) {
        if (consume('+')) {
          auto parent = std::make_unique<Node>();
          parent->op = Op::add;
          parent->lhs = std::move(node);
          parent->rhs = parse_term();
          node = std::move(parent);
        } else if (consume('-')) {
          auto parent = std::make_unique<Node>();
          parent->op = Op::sub;
          parent->lhs = std::move(node);
          parent->rhs = parse_term();
          node = std::move(parent);
        } else {
          return node;
        }
      }
    }

    NodePtr parse_term() {
      NodePtr node = parse_factor();
      while (consume('*')) {
        auto parent = std::make_unique<Node>();
        parent->op = Op::mul;
        parent->lhs = std::move(node);
        parent->rhs = parse_factor();
        node = std::move(parent);
      }
      return node;
    }

    NodePtr parse_factor() {
      NodePtr base = parse_base();
      if (consume('^')) {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos == start) fail("expected a nonnegative integer exponent");
        auto parent = std::make_unique<Node>();
        parent->op = Op::pow_int;
        parent->value = std::stod(std::string(text.substr(start, pos - start)));
        parent->lhs = std::move(base);
        return parent;
      }
      return base;
    }

    NodePtr parse_base() {
      skip_ws();
      if (pos >= text.size()) fail("unexpected end of input");
      const char c = text[pos];
      if (c == '(') {
        ++pos;
        NodePtr inner = parse_expr();
        if (!consume(')')) fail("expected ')'");
        return inner;
      }
      if (c == '-') {
        ++pos;
        auto node = std::make_unique<Node>();
        node->op = Op::neg;
        node->lhs = parse_factor();
        return node;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t start = pos;
        while (pos < text.size() &&
               (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.' ||
                text[pos] == 'e' || text[pos] == 'E' ||
                ((text[pos] == '+' || text[pos] == '-') &&
                 (text[pos - 1] == 'e' || text[pos - 1] == 'E')))) {
          ++pos;
        }
        auto node = std::make_unique<Node>();
        node->op = Op::number;
        try {
          node->value = std::stod(std::string(text.substr(start, pos - start)));
        } catch (const std::exception&) {
          fail("malformed number");
        }
        return node;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        std::size_t start = pos;
        while (pos < text.size() && std::isalpha(static_cast<unsigned char>(text[pos]))) ++pos;
        const std::string_view word = text.substr(start, pos - start);
        if (word == "x") {
          auto node = std::make_unique<Node>();
          node->op = Op::var_x;
          return node;
        }
        if (word == "pi") {
          auto node = std::make_unique<Node>();
          node->op = Op::number;
          node->value = 3.14159265358979323846;
          return node;
        }
        if (word == "cos" || word == "sin") {
          if (!consume('(')) fail("expected '(' after function name");
          auto node = std::make_unique<Node>();
          node->op = (word == "cos") ? Op::cos_fn : Op::sin_fn;
          node->lhs = parse_expr();
          if (!consume(')')) fail("expected ')'");
          return node;
        }
        fail("unknown identifier '" + std::string(word) + "' (allowed: x, pi, cos, sin)");
      }
      fail(std::string("unexpected character '") + c + "'");
    }
  };

  NodePtr root_;
};

}  // namespace switchrd
