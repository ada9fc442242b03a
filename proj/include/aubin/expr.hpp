// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aubin/rational.hpp"

namespace aubin {

struct ExprError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Syntax error with the byte offset of the offending character.
struct SyntaxError : ExprError {
  SyntaxError(const std::string& what, std::size_t offset_)
      : ExprError(what + " (at byte " + std::to_string(offset_) + ")"), offset(offset_) {}
  std::size_t offset;
};

struct UndeclaredIdentifierError : ExprError {
  UndeclaredIdentifierError(const std::string& ident, std::size_t offset_)
      : ExprError("undeclared identifier '" + ident + "' (at byte " + std::to_string(offset_) + ")"),
        identifier(ident),
        offset(offset_) {}
  std::string identifier;
  std::size_t offset;
};

struct UnboundIdentifierError : ExprError {
  explicit UnboundIdentifierError(const std::string& ident)
      : ExprError("unbound identifier '" + ident + "'"), identifier(ident) {}
  std::string identifier;
};

class ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

// Polynomial expression AST over + - * ^ with exact rational constants.
// Nodes are immutable and shared; an Expression value is safe to copy and to
// read concurrently.
class ExprNode {
 public:
  enum class Kind { Constant, Variable, Add, Sub, Mul, Neg, Pow };

  Kind kind;
  Rational value;      // Constant
  std::string name;    // Variable
  int var_index = -1;  // position in the owning symbol list
  ExprPtr lhs, rhs;    // Add/Sub/Mul; Neg uses lhs only
  int exponent = 0;    // Pow (lhs ^ exponent), exponent >= 0

  static ExprPtr constant(const Rational& r);
  static ExprPtr variable(std::string name, int index);
  static ExprPtr add(ExprPtr a, ExprPtr b);
  static ExprPtr sub(ExprPtr a, ExprPtr b);
  static ExprPtr mul(ExprPtr a, ExprPtr b);
  static ExprPtr neg(ExprPtr a);
  static ExprPtr pow(ExprPtr a, int k);
};

class Expression {
 public:
  Expression() = default;
  explicit Expression(ExprPtr root) : root_(std::move(root)) {}

  bool empty() const { return root_ == nullptr; }
  const ExprPtr& root() const { return root_; }

  // Evaluation against the declared symbol order used at parse time.
  double eval(std::span<const double> values) const;
  double eval(const std::map<std::string, double>& bindings) const;

  Expression derivative(const std::string& var) const;
  Expression derivative(int var_index) const;

  // Round-trippable text form (fully parenthesized where needed).
  std::string str() const;

  // Identifiers actually appearing in the tree.
  std::vector<std::string> free_identifiers() const;

 private:
  ExprPtr root_;
};

// Parses `text` against the declared identifier list. The variable indices in
// the resulting AST refer to positions in `symbols`.
Expression parse_expr(const std::string& text, const std::vector<std::string>& symbols);

}  // namespace aubin
