#pragma once

// Small arithmetic expression language used by model files.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' exponent)*        exponent folds to a constant
//   primary := number | ident | ident '(' expr ')' | '(' expr ')'
//
// Functions: sin, cos, exp, ln, sqrt. Identifiers resolve to declared
// variables (slot indices) or named constants substituted at parse time.

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sepcross::expr {

enum class Op { constant, variable, neg, add, sub, mul, div, pow, sin, cos, exp, ln, sqrt };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::constant;
  double value = 0.0;      // constant value, or exponent for Op::pow
  std::size_t slot = 0;    // Op::variable
  NodePtr lhs;
  NodePtr rhs;
};

// Immutable expression bound to an ordered variable list.
class Expr {
 public:
  Expr() = default;
  Expr(NodePtr root, std::vector<std::string> variables);

  const NodePtr& root() const { return root_; }
  const std::vector<std::string>& variables() const { return variables_; }

  // Values are given in the order of variables().
  double evaluate(std::span<const double> values) const;

  // Number of top-level additive terms (a - b + c counts 3).
  std::size_t additive_terms() const;

  bool is_constant() const;

 private:
  NodePtr root_;
  std::vector<std::string> variables_;
};

using Env = std::map<std::string, double, std::less<>>;
using Constants = std::map<std::string, double, std::less<>>;

Expr parse(std::string_view text, const std::vector<std::string>& variables,
           const Constants& constants = {});

// Exact partial derivative; only constant folding is applied to the result.
Expr differentiate(const Expr& e, std::string_view variable);

// Requires a binding for every variable the expression actually uses.
double evaluate(const Expr& e, const Env& env);

// Re-parsable text form.
std::string print(const Expr& e);

}  // namespace sepcross::expr
