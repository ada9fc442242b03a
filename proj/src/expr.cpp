// SPDX-License-Identifier: Apache-2.0
#include "aubin/expr.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace aubin {

namespace {

Rational const_val(const ExprPtr& e) { return e->value; }
bool is_const(const ExprPtr& e) { return e->kind == ExprNode::Kind::Constant; }

ExprPtr make_node(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }

}  // namespace

ExprPtr ExprNode::constant(const Rational& r) {
  ExprNode n;
  n.kind = Kind::Constant;
  n.value = r;
  return make_node(std::move(n));
}

ExprPtr ExprNode::variable(std::string name, int index) {
  ExprNode n;
  n.kind = Kind::Variable;
  n.name = std::move(name);
  n.var_index = index;
  return make_node(std::move(n));
}

// The smart constructors fold constants (and the 0/1 identities they imply);
// no other simplification is attempted.
ExprPtr ExprNode::add(ExprPtr a, ExprPtr b) {
  if (is_const(a) && is_const(b)) return constant(const_val(a) + const_val(b));
  if (is_const(a) && const_val(a).is_zero()) return b;
  if (is_const(b) && const_val(b).is_zero()) return a;
  ExprNode n;
  n.kind = Kind::Add;
  n.lhs = std::move(a);
  n.rhs = std::move(b);
  return make_node(std::move(n));
}

ExprPtr ExprNode::sub(ExprPtr a, ExprPtr b) {
  if (is_const(a) && is_const(b)) return constant(const_val(a) - const_val(b));
  if (is_const(b) && const_val(b).is_zero()) return a;
  ExprNode n;
  n.kind = Kind::Sub;
  n.lhs = std::move(a);
  n.rhs = std::move(b);
  return make_node(std::move(n));
}

ExprPtr ExprNode::mul(ExprPtr a, ExprPtr b) {
  if (is_const(a) && is_const(b)) return constant(const_val(a) * const_val(b));
  if (is_const(a)) {
    if (const_val(a).is_zero()) return a;
    if (const_val(a).is_one()) return b;
  }
  if (is_const(b)) {
    if (const_val(b).is_zero()) return b;
    if (const_val(b).is_one()) return a;
  }
  ExprNode n;
  n.kind = Kind::Mul;
  n.lhs = std::move(a);
  n.rhs = std::move(b);
  return make_node(std::move(n));
}

ExprPtr ExprNode::neg(ExprPtr a) {
  if (is_const(a)) return constant(-const_val(a));
  ExprNode n;
  n.kind = Kind::Neg;
  n.lhs = std::move(a);
  return make_node(std::move(n));
}

ExprPtr ExprNode::pow(ExprPtr a, int k) {
  if (k < 0) throw ExprError("negative exponent");
  if (k == 0) return constant(Rational(1));
  if (k == 1) return a;
  if (is_const(a)) return constant(const_val(a).pow(k));
  ExprNode n;
  n.kind = Kind::Pow;
  n.lhs = std::move(a);
  n.exponent = k;
  return make_node(std::move(n));
}

namespace {

double eval_node(const ExprNode& n, std::span<const double> values) {
  switch (n.kind) {
    case ExprNode::Kind::Constant:
      return n.value.to_double();
    case ExprNode::Kind::Variable:
      if (n.var_index < 0 || static_cast<std::size_t>(n.var_index) >= values.size())
        throw UnboundIdentifierError(n.name);
      return values[static_cast<std::size_t>(n.var_index)];
    case ExprNode::Kind::Add:
      return eval_node(*n.lhs, values) + eval_node(*n.rhs, values);
    case ExprNode::Kind::Sub:
      return eval_node(*n.lhs, values) - eval_node(*n.rhs, values);
    case ExprNode::Kind::Mul:
      return eval_node(*n.lhs, values) * eval_node(*n.rhs, values);
    case ExprNode::Kind::Neg:
      return -eval_node(*n.lhs, values);
    case ExprNode::Kind::Pow: {
      const double base = eval_node(*n.lhs, values);
      double r = 1.0;
      for (int i = 0; i < n.exponent; ++i) r *= base;
      return r;
    }
  }
  throw ExprError("corrupt expression node");
}

ExprPtr derive_node(const ExprPtr& e, int var) {
  using K = ExprNode::Kind;
  switch (e->kind) {
    case K::Constant:
      return ExprNode::constant(Rational(0));
    case K::Variable:
      return ExprNode::constant(Rational(e->var_index == var ? 1 : 0));
    case K::Add:
      return ExprNode::add(derive_node(e->lhs, var), derive_node(e->rhs, var));
    case K::Sub:
      return ExprNode::sub(derive_node(e->lhs, var), derive_node(e->rhs, var));
    case K::Mul:
      return ExprNode::add(ExprNode::mul(derive_node(e->lhs, var), e->rhs),
                           ExprNode::mul(e->lhs, derive_node(e->rhs, var)));
    case K::Neg:
      return ExprNode::neg(derive_node(e->lhs, var));
    case K::Pow:
      // d(a^k) = k * a^(k-1) * a'
      return ExprNode::mul(
          ExprNode::mul(ExprNode::constant(Rational(e->exponent)), ExprNode::pow(e->lhs, e->exponent - 1)),
          derive_node(e->lhs, var));
  }
  throw ExprError("corrupt expression node");
}

void collect_identifiers(const ExprNode& n, std::set<std::string>& out) {
  if (n.kind == ExprNode::Kind::Variable) out.insert(n.name);
  if (n.lhs) collect_identifiers(*n.lhs, out);
  if (n.rhs) collect_identifiers(*n.rhs, out);
}

// Precedence levels for printing: 0 add/sub, 1 mul, 2 neg, 3 pow/atom.
void print_node(const ExprNode& n, int parent_prec, std::string& out) {
  using K = ExprNode::Kind;
  const auto paren = [&](int prec, auto&& body) {
    const bool need = prec < parent_prec;
    if (need) out += '(';
    body();
    if (need) out += ')';
  };
  switch (n.kind) {
    case K::Constant:
      if (n.value.num() < 0) {
        paren(2, [&] { out += n.value.str(); });
      } else {
        out += n.value.str();
      }
      return;
    case K::Variable:
      out += n.name;
      return;
    case K::Add:
      paren(0, [&] {
        print_node(*n.lhs, 0, out);
        out += " + ";
        print_node(*n.rhs, 1, out);
      });
      return;
    case K::Sub:
      paren(0, [&] {
        print_node(*n.lhs, 0, out);
        out += " - ";
        print_node(*n.rhs, 1, out);
      });
      return;
    case K::Mul:
      paren(1, [&] {
        print_node(*n.lhs, 1, out);
        out += "*";
        print_node(*n.rhs, 2, out);
      });
      return;
    case K::Neg:
      paren(2, [&] {
        out += '-';
        print_node(*n.lhs, 2, out);
      });
      return;
    case K::Pow:
      paren(3, [&] {
        print_node(*n.lhs, 4, out);
        out += '^';
        out += std::to_string(n.exponent);
      });
      return;
  }
}

// Recursive-descent parser for the polynomial grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor ('*' factor)*
//   factor := '-' factor | power
//   power  := atom ('^' integer)*
//   atom   := number | identifier | '(' expr ')'
//   number := digits ['.' digits] | digits '/' digits
class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& symbols)
      : text_(text), symbols_(symbols) {}

  ExprPtr run() {
    skip_ws();
    ExprPtr e = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) throw SyntaxError("unexpected trailing input", pos_);
    return e;
  }

 private:
  ExprPtr parse_sum() {
    ExprPtr e = parse_term();
    for (;;) {
      skip_ws();
      if (accept('+')) {
        e = ExprNode::add(e, parse_term());
      } else if (accept('-')) {
        e = ExprNode::sub(e, parse_term());
      } else {
        return e;
      }
    }
  }

  ExprPtr parse_term() {
    ExprPtr e = parse_factor();
    for (;;) {
      skip_ws();
      if (accept('*')) {
        e = ExprNode::mul(e, parse_factor());
      } else {
        return e;
      }
    }
  }

  ExprPtr parse_factor() {
    skip_ws();
    if (accept('-')) return ExprNode::neg(parse_factor());
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr e = parse_atom();
    for (;;) {
      skip_ws();
      if (!accept('^')) return e;
      skip_ws();
      const std::size_t at = pos_;
      if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
        throw SyntaxError("exponent must be a nonnegative integer", at);
      e = ExprNode::pow(e, static_cast<int>(parse_uint()));
    }
  }

  ExprPtr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) throw SyntaxError("unexpected end of input", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      ExprPtr e = parse_sum();
      skip_ws();
      if (!accept(')')) throw SyntaxError("expected ')'", pos_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    throw SyntaxError(std::string("unexpected character '") + c + "'", pos_);
  }

  ExprPtr parse_number() {
    const std::size_t at = pos_;
    std::int64_t intpart = parse_uint();
    Rational r(intpart);
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      std::int64_t frac = 0, scale = 1;
      if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
        throw SyntaxError("expected digits after decimal point", pos_);
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        frac = frac * 10 + (text_[pos_] - '0');
        scale *= 10;
        ++pos_;
      }
      r = r + Rational(frac, scale);
    } else if (pos_ < text_.size() && text_[pos_] == '/') {
      // Rational literal "a/b"; the grammar has no division operator.
      ++pos_;
      if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
        throw SyntaxError("expected denominator digits after '/'", pos_);
      const std::int64_t den = parse_uint();
      if (den == 0) throw SyntaxError("zero denominator", at);
      r = Rational(intpart, den);
    }
    return ExprNode::constant(r);
  }

  ExprPtr parse_identifier() {
    const std::size_t at = pos_;
    std::string name;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      name += text_[pos_];
      ++pos_;
    }
    const auto it = std::find(symbols_.begin(), symbols_.end(), name);
    if (it == symbols_.end()) throw UndeclaredIdentifierError(name, at);
    return ExprNode::variable(name, static_cast<int>(it - symbols_.begin()));
  }

  std::int64_t parse_uint() {
    std::int64_t v = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      v = v * 10 + (text_[pos_] - '0');
      ++pos_;
    }
    return v;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  const std::string& text_;
  const std::vector<std::string>& symbols_;
  std::size_t pos_ = 0;
};

}  // namespace

double Expression::eval(std::span<const double> values) const {
  if (!root_) throw ExprError("empty expression");
  return eval_node(*root_, values);
}

double Expression::eval(const std::map<std::string, double>& bindings) const {
  // Re-binds by name; var_index is only a hint for the span overload.
  if (!root_) throw ExprError("empty expression");
  struct Visitor {
    const std::map<std::string, double>& b;
    double operator()(const ExprNode& n) const {
      switch (n.kind) {
        case ExprNode::Kind::Constant:
          return n.value.to_double();
        case ExprNode::Kind::Variable: {
          const auto it = b.find(n.name);
          if (it == b.end()) throw UnboundIdentifierError(n.name);
          return it->second;
        }
        case ExprNode::Kind::Add:
          return (*this)(*n.lhs) + (*this)(*n.rhs);
        case ExprNode::Kind::Sub:
          return (*this)(*n.lhs) - (*this)(*n.rhs);
        case ExprNode::Kind::Mul:
          return (*this)(*n.lhs) * (*this)(*n.rhs);
        case ExprNode::Kind::Neg:
          return -(*this)(*n.lhs);
        case ExprNode::Kind::Pow: {
          const double base = (*this)(*n.lhs);
          double r = 1.0;
          for (int i = 0; i < n.exponent; ++i) r *= base;
          return r;
        }
      }
      throw ExprError("corrupt expression node");
    }
  };
  return Visitor{bindings}(*root_);
}

Expression Expression::derivative(int var_index) const {
  if (!root_) throw ExprError("empty expression");
  return Expression(derive_node(root_, var_index));
}

Expression Expression::derivative(const std::string& var) const {
  if (!root_) throw ExprError("empty expression");
  // Locate the index used at parse time by scanning the tree; a variable not
  // present anywhere differentiates to zero.
  std::vector<std::pair<std::string, int>> seen;
  struct Scan {
    std::vector<std::pair<std::string, int>>& s;
    void operator()(const ExprNode& n) const {
      if (n.kind == ExprNode::Kind::Variable) s.emplace_back(n.name, n.var_index);
      if (n.lhs) (*this)(*n.lhs);
      if (n.rhs) (*this)(*n.rhs);
    }
  };
  Scan{seen}(*root_);
  for (const auto& [name, idx] : seen)
    if (name == var) return derivative(idx);
  return Expression(ExprNode::constant(Rational(0)));
}

std::string Expression::str() const {
  if (!root_) return "0";
  std::string out;
  print_node(*root_, 0, out);
  return out;
}

std::vector<std::string> Expression::free_identifiers() const {
  std::set<std::string> s;
  if (root_) collect_identifiers(*root_, s);
  return {s.begin(), s.end()};
}

Expression parse_expr(const std::string& text, const std::vector<std::string>& symbols) {
  Parser p(text, symbols);
  return Expression(p.run());
}

}  // namespace aubin
