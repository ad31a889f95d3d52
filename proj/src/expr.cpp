#include "sepcross/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <set>

#include "sepcross/error.hpp"

namespace sepcross::expr {

namespace {

NodePtr make_constant(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::constant;
  n->value = v;
  return n;
}

NodePtr make_variable(std::size_t slot) {
  auto n = std::make_shared<Node>();
  n->op = Op::variable;
  n->slot = slot;
  return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::constant && n->value == v; }

double apply_pow(double base, double exponent) {
  const double rounded = std::nearbyint(exponent);
  if (rounded == exponent && std::abs(exponent) <= 64.0) {
    if (base == 0.0 && exponent < 0.0) {
      throw Error(ErrorKind::domain, "zero raised to a negative power");
    }
    return std::pow(base, exponent);
  }
  if (!(base > 0.0)) {
    throw Error(ErrorKind::domain, "non-integer power of a non-positive base");
  }
  return std::pow(base, exponent);
}

double apply_unary(Op op, double x) {
  switch (op) {
    case Op::neg: return -x;
    case Op::sin: return std::sin(x);
    case Op::cos: return std::cos(x);
    case Op::exp: return std::exp(x);
    case Op::ln:
      if (!(x > 0.0)) throw Error(ErrorKind::domain, "ln of a non-positive value");
      return std::log(x);
    case Op::sqrt:
      if (x < 0.0) throw Error(ErrorKind::domain, "sqrt of a negative value");
      return std::sqrt(x);
    default: break;
  }
  throw Error(ErrorKind::model, "not a unary operator");
}

double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::add: return a + b;
    case Op::sub: return a - b;
    case Op::mul: return a * b;
    case Op::div:
      if (b == 0.0) throw Error(ErrorKind::domain, "division by zero");
      return a / b;
    default: break;
  }
  throw Error(ErrorKind::model, "not a binary operator");
}

NodePtr make_unary(Op op, NodePtr arg) {
  if (arg->op == Op::constant) return make_constant(apply_unary(op, arg->value));
  if (op == Op::neg && arg->op == Op::neg) return arg->lhs;
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(arg);
  return n;
}

NodePtr make_binary(Op op, NodePtr a, NodePtr b) {
  if (a->op == Op::constant && b->op == Op::constant) {
    return make_constant(apply_binary(op, a->value, b->value));
  }
  switch (op) {
    case Op::add:
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      break;
    case Op::sub:
      if (is_const(b, 0.0)) return a;
      if (is_const(a, 0.0)) return make_unary(Op::neg, b);
      break;
    case Op::mul:
      if (is_const(a, 0.0) || is_const(b, 0.0)) return make_constant(0.0);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      break;
    case Op::div:
      if (is_const(b, 1.0)) return a;
      if (is_const(a, 0.0) && !is_const(b, 0.0)) return make_constant(0.0);
      break;
    default: break;
  }
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

NodePtr make_pow(NodePtr base, double exponent) {
  if (base->op == Op::constant) return make_constant(apply_pow(base->value, exponent));
  if (exponent == 0.0) return make_constant(1.0);
  if (exponent == 1.0) return base;
  auto n = std::make_shared<Node>();
  n->op = Op::pow;
  n->value = exponent;
  n->lhs = std::move(base);
  return n;
}

double eval_node(const Node& n, std::span<const double> values) {
  switch (n.op) {
    case Op::constant: return n.value;
    case Op::variable: return values[n.slot];
    case Op::neg:
    case Op::sin:
    case Op::cos:
    case Op::exp:
    case Op::ln:
    case Op::sqrt: return apply_unary(n.op, eval_node(*n.lhs, values));
    case Op::pow: return apply_pow(eval_node(*n.lhs, values), n.value);
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div:
      return apply_binary(n.op, eval_node(*n.lhs, values), eval_node(*n.rhs, values));
  }
  return 0.0;
}

void collect_slots(const Node& n, std::set<std::size_t>& out) {
  if (n.op == Op::variable) out.insert(n.slot);
  if (n.lhs) collect_slots(*n.lhs, out);
  if (n.rhs) collect_slots(*n.rhs, out);
}

// ---------------------------------------------------------------------------

enum class Tok { number, ident, plus, minus, star, slash, caret, lparen, rparen, end };

struct Token {
  Tok kind = Tok::end;
  std::size_t offset = 0;
  double number = 0.0;
  std::string text;
};

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& variables,
         const Constants& constants)
      : text_(text), variables_(variables), constants_(constants) {
    advance();
  }

  NodePtr parse_all() {
    if (tok_.kind == Tok::end) throw SyntaxError(0, "empty expression");
    NodePtr e = parse_expr();
    if (tok_.kind != Tok::end) throw SyntaxError(tok_.offset, "unexpected token");
    return e;
  }

 private:
  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    tok_ = Token{};
    tok_.offset = pos_;
    if (pos_ >= text_.size()) return;
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = text_.data() + pos_;
      char* end = nullptr;
      // strtod needs a terminated buffer; copy the longest numeric prefix.
      std::size_t n = 0;
      while (pos_ + n < text_.size()) {
        const char d = text_[pos_ + n];
        const bool exp_sign = n > 0 && (d == '+' || d == '-') &&
                              (text_[pos_ + n - 1] == 'e' || text_[pos_ + n - 1] == 'E');
        if (std::isdigit(static_cast<unsigned char>(d)) || d == '.' || d == 'e' || d == 'E' ||
            exp_sign) {
          ++n;
        } else {
          break;
        }
      }
      const std::string buf(begin, n);
      const double v = std::strtod(buf.c_str(), &end);
      const auto used = static_cast<std::size_t>(end - buf.c_str());
      if (used == 0) throw SyntaxError(pos_, "malformed number");
      tok_.kind = Tok::number;
      tok_.number = v;
      pos_ += used;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t n = 0;
      while (pos_ + n < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_ + n])) || text_[pos_ + n] == '_')) {
        ++n;
      }
      tok_.kind = Tok::ident;
      tok_.text = std::string(text_.substr(pos_, n));
      pos_ += n;
      return;
    }
    switch (c) {
      case '+': tok_.kind = Tok::plus; break;
      case '-': tok_.kind = Tok::minus; break;
      case '*': tok_.kind = Tok::star; break;
      case '/': tok_.kind = Tok::slash; break;
      case '^': tok_.kind = Tok::caret; break;
      case '(': tok_.kind = Tok::lparen; break;
      case ')': tok_.kind = Tok::rparen; break;
      default: throw SyntaxError(pos_, std::string("unexpected character '") + c + "'");
    }
    ++pos_;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    while (tok_.kind == Tok::plus || tok_.kind == Tok::minus) {
      const Op op = tok_.kind == Tok::plus ? Op::add : Op::sub;
      advance();
      lhs = make_binary(op, lhs, parse_term());
    }
    return lhs;
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    while (tok_.kind == Tok::star || tok_.kind == Tok::slash) {
      const Op op = tok_.kind == Tok::star ? Op::mul : Op::div;
      advance();
      lhs = make_binary(op, lhs, parse_unary());
    }
    return lhs;
  }

  NodePtr parse_unary() {
    if (tok_.kind == Tok::minus) {
      advance();
      return make_unary(Op::neg, parse_unary());
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    while (tok_.kind == Tok::caret) {
      advance();
      const std::size_t at = tok_.offset;
      NodePtr ex = parse_exponent();
      if (ex->op != Op::constant) throw SyntaxError(at, "exponent must be a constant");
      base = make_pow(base, ex->value);
    }
    return base;
  }

  NodePtr parse_exponent() {
    if (tok_.kind == Tok::minus) {
      advance();
      return make_unary(Op::neg, parse_exponent());
    }
    return parse_primary();
  }

  NodePtr parse_primary() {
    switch (tok_.kind) {
      case Tok::number: {
        NodePtr n = make_constant(tok_.number);
        advance();
        return n;
      }
      case Tok::lparen: {
        advance();
        NodePtr e = parse_expr();
        expect(Tok::rparen, "expected ')'");
        return e;
      }
      case Tok::ident: {
        const Token id = tok_;
        advance();
        if (tok_.kind == Tok::lparen) {
          const Op op = function_op(id);
          advance();
          NodePtr arg = parse_expr();
          expect(Tok::rparen, "expected ')'");
          return make_unary(op, arg);
        }
        return resolve(id);
      }
      case Tok::end: throw SyntaxError(tok_.offset, "unexpected end of expression");
      default: throw SyntaxError(tok_.offset, "unexpected token");
    }
  }

  Op function_op(const Token& id) const {
    if (id.text == "sin") return Op::sin;
    if (id.text == "cos") return Op::cos;
    if (id.text == "exp") return Op::exp;
    if (id.text == "ln") return Op::ln;
    if (id.text == "sqrt") return Op::sqrt;
    throw Error(ErrorKind::unknown_function,
                "unknown function '" + id.text + "' at offset " + std::to_string(id.offset));
  }

  NodePtr resolve(const Token& id) const {
    for (std::size_t i = 0; i < variables_.size(); ++i) {
      if (variables_[i] == id.text) return make_variable(i);
    }
    if (auto it = constants_.find(id.text); it != constants_.end()) return make_constant(it->second);
    if (id.text == "pi") return make_constant(std::numbers::pi);
    throw Error(ErrorKind::unknown_identifier,
                "unknown identifier '" + id.text + "' at offset " + std::to_string(id.offset));
  }

  void expect(Tok kind, const char* message) {
    if (tok_.kind != kind) throw SyntaxError(tok_.offset, message);
    advance();
  }

  std::string_view text_;
  const std::vector<std::string>& variables_;
  const Constants& constants_;
  std::size_t pos_ = 0;
  Token tok_;
};

NodePtr derive(const NodePtr& n, std::size_t slot) {
  switch (n->op) {
    case Op::constant: return make_constant(0.0);
    case Op::variable: return make_constant(n->slot == slot ? 1.0 : 0.0);
    case Op::neg: return make_unary(Op::neg, derive(n->lhs, slot));
    case Op::add: return make_binary(Op::add, derive(n->lhs, slot), derive(n->rhs, slot));
    case Op::sub: return make_binary(Op::sub, derive(n->lhs, slot), derive(n->rhs, slot));
    case Op::mul:
      return make_binary(Op::add, make_binary(Op::mul, derive(n->lhs, slot), n->rhs),
                         make_binary(Op::mul, n->lhs, derive(n->rhs, slot)));
    case Op::div: {
      // (u/v)' = u'/v - u v'/v^2
      NodePtr du = derive(n->lhs, slot);
      NodePtr dv = derive(n->rhs, slot);
      return make_binary(Op::sub, make_binary(Op::div, du, n->rhs),
                         make_binary(Op::div, make_binary(Op::mul, n->lhs, dv),
                                     make_pow(n->rhs, 2.0)));
    }
    case Op::pow:
      return make_binary(Op::mul,
                         make_binary(Op::mul, make_constant(n->value), make_pow(n->lhs, n->value - 1.0)),
                         derive(n->lhs, slot));
    case Op::sin:
      return make_binary(Op::mul, make_unary(Op::cos, n->lhs), derive(n->lhs, slot));
    case Op::cos:
      return make_binary(Op::mul, make_unary(Op::neg, make_unary(Op::sin, n->lhs)),
                         derive(n->lhs, slot));
    case Op::exp: return make_binary(Op::mul, n, derive(n->lhs, slot));
    case Op::ln: return make_binary(Op::div, derive(n->lhs, slot), n->lhs);
    case Op::sqrt:
      return make_binary(Op::div, derive(n->lhs, slot), make_binary(Op::mul, make_constant(2.0), n));
  }
  return make_constant(0.0);
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (v < 0.0) return "(" + s + ")";
  return s;
}

std::string print_node(const Node& n, const std::vector<std::string>& vars) {
  switch (n.op) {
    case Op::constant: return format_number(n.value);
    case Op::variable: return vars[n.slot];
    case Op::neg: return "(-" + print_node(*n.lhs, vars) + ")";
    case Op::add: return "(" + print_node(*n.lhs, vars) + " + " + print_node(*n.rhs, vars) + ")";
    case Op::sub: return "(" + print_node(*n.lhs, vars) + " - " + print_node(*n.rhs, vars) + ")";
    case Op::mul: return "(" + print_node(*n.lhs, vars) + " * " + print_node(*n.rhs, vars) + ")";
    case Op::div: return "(" + print_node(*n.lhs, vars) + " / " + print_node(*n.rhs, vars) + ")";
    case Op::pow: return "(" + print_node(*n.lhs, vars) + " ^ " + format_number(n.value) + ")";
    case Op::sin: return "sin(" + print_node(*n.lhs, vars) + ")";
    case Op::cos: return "cos(" + print_node(*n.lhs, vars) + ")";
    case Op::exp: return "exp(" + print_node(*n.lhs, vars) + ")";
    case Op::ln: return "ln(" + print_node(*n.lhs, vars) + ")";
    case Op::sqrt: return "sqrt(" + print_node(*n.lhs, vars) + ")";
  }
  return {};
}

std::size_t count_terms(const Node& n) {
  if (n.op == Op::add || n.op == Op::sub) return count_terms(*n.lhs) + count_terms(*n.rhs);
  return 1;
}

}  // namespace

Expr::Expr(NodePtr root, std::vector<std::string> variables)
    : root_(std::move(root)), variables_(std::move(variables)) {}

double Expr::evaluate(std::span<const double> values) const {
  const double v = eval_node(*root_, values);
  if (!std::isfinite(v)) throw Error(ErrorKind::domain, "expression evaluated to a non-finite value");
  return v;
}

std::size_t Expr::additive_terms() const { return count_terms(*root_); }

bool Expr::is_constant() const { return root_->op == Op::constant; }

Expr parse(std::string_view text, const std::vector<std::string>& variables,
           const Constants& constants) {
  Parser parser(text, variables, constants);
  return Expr(parser.parse_all(), variables);
}

Expr differentiate(const Expr& e, std::string_view variable) {
  const auto& vars = e.variables();
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (vars[i] == variable) return Expr(derive(e.root(), i), vars);
  }
  throw Error(ErrorKind::unknown_identifier,
              "cannot differentiate with respect to undeclared variable '" + std::string(variable) + "'");
}

double evaluate(const Expr& e, const Env& env) {
  std::set<std::size_t> used;
  collect_slots(*e.root(), used);
  std::vector<double> values(e.variables().size(), 0.0);
  for (std::size_t slot : used) {
    const auto& name = e.variables()[slot];
    auto it = env.find(name);
    if (it == env.end()) throw Error(ErrorKind::missing_binding, "no binding for '" + name + "'");
    values[slot] = it->second;
  }
  return e.evaluate(values);
}

std::string print(const Expr& e) { return print_node(*e.root(), e.variables()); }

}  // namespace sepcross::expr
