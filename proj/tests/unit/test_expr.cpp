#include <cmath>
#include <random>

#include "doctest.h"

#include "sepcross/error.hpp"
#include "sepcross/expr.hpp"

using namespace sepcross;
using namespace sepcross::expr;

namespace {
const std::vector<std::string> kVars{"p", "q", "z1"};

double at(const Expr& e, double p, double q, double z1 = 0.0) {
  const double v[3] = {p, q, z1};
  return e.evaluate(v);
}
}  // namespace

TEST_CASE("duffing energy has three top-level additive terms") {
  const Expr e = parse("p^2/2 - q^2/2 + q^4/4", kVars);
  CHECK(e.additive_terms() == 3);
  CHECK(at(e, 1.0, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("syntax error carries the offset") {
  try {
    parse("p +* q", kVars);
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.offset() == 3);
    CHECK(e.kind() == ErrorKind::syntax);
  }
}

TEST_CASE("unknown identifiers and functions") {
  try {
    parse("p + w", kVars);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::unknown_identifier);
  }
  try {
    parse("tan(q)", kVars);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::unknown_function);
  }
}

TEST_CASE("product of a function and a variable") {
  const Expr e = parse("sin(q) * z1", kVars);
  REQUIRE(e.root()->op == Op::mul);
  CHECK(e.root()->lhs->op == Op::sin);
  CHECK(e.root()->rhs->op == Op::variable);
  CHECK(e.root()->rhs->slot == 2);
}

TEST_CASE("precedence and associativity") {
  CHECK(at(parse("-q^2", kVars), 0.0, 3.0) == doctest::Approx(-9.0));
  CHECK(at(parse("8/2/2", kVars), 0.0, 0.0) == doctest::Approx(2.0));
  CHECK(at(parse("5-2-1", kVars), 0.0, 0.0) == doctest::Approx(2.0));
  CHECK(at(parse("2*p+3*q", kVars), 1.0, 2.0) == doctest::Approx(8.0));
}

TEST_CASE("named constants substitute at parse time") {
  const Expr e = parse("-gamma*p", kVars, {{"gamma", 0.5}});
  CHECK(at(e, 4.0, 0.0) == doctest::Approx(-2.0));
}

TEST_CASE("derivative table") {
  CHECK(at(differentiate(parse("q^4/4", kVars), "q"), 0.0, 2.0) == doctest::Approx(8.0));
  CHECK(at(differentiate(parse("p^2/2", kVars), "p"), 3.0, 0.0) == doctest::Approx(3.0));
  CHECK(at(differentiate(parse("sin(q)", kVars), "q"), 0.0, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("evaluation domain errors") {
  const Expr l = parse("ln(q)", kVars);
  CHECK_THROWS_AS(at(l, 0.0, 0.0), Error);
  try {
    at(l, 0.0, 0.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::domain);
  }
  CHECK_THROWS_AS(at(parse("1/q", kVars), 0.0, 0.0), Error);
  CHECK_THROWS_AS(at(parse("sqrt(q)", kVars), 0.0, -1.0), Error);
  CHECK_THROWS_AS(at(parse("q^0.5", kVars), 0.0, -1.0), Error);
}

TEST_CASE("map evaluation needs every used binding") {
  const Expr e = parse("p^2/2", kVars);
  CHECK(evaluate(e, Env{{"p", 2.0}}) == doctest::Approx(2.0));
  try {
    evaluate(parse("p + q", kVars), Env{{"p", 1.0}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::missing_binding);
  }
}

TEST_CASE("symbolic derivatives agree with central differences") {
  const char* sources[] = {"p^2/2 - q^2/2 + q^4/4", "sin(q) * z1 + exp(p/3)", "z1*q^3/3 + cos(p*q)",
                           "ln(2 + q^2) * sqrt(1 + p^2)", "(p - q)^3 / (3 + z1^2)",
                           "-exp(-q^2) + p*z1 - q/(1 + p^2)"};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (const char* src : sources) {
    const Expr e = parse(src, kVars);
    for (std::size_t v = 0; v < kVars.size(); ++v) {
      const Expr d = differentiate(e, kVars[v]);
      for (int k = 0; k < 20; ++k) {
        double x[3] = {u(rng), u(rng), u(rng)};
        const double exact = d.evaluate(x);
        const double h = 1e-6;
        double xp[3] = {x[0], x[1], x[2]}, xm[3] = {x[0], x[1], x[2]};
        xp[v] += h;
        xm[v] -= h;
        const double fd = (e.evaluate(xp) - e.evaluate(xm)) / (2 * h);
        CHECK(std::abs(exact - fd) <= 1e-6 * (1.0 + std::abs(exact)));
      }
    }
  }
}

TEST_CASE("print then parse reproduces evaluations") {
  const char* sources[] = {"p^2/2 - q^2/2 + q^4/4", "-(p - q)^3 / (3 + z1^2)",
                           "sin(q) * z1 - -p", "exp(-q^2)*2.5e-3 + 1/(1 + p^2)"};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (const char* src : sources) {
    const Expr e = parse(src, kVars);
    const Expr r = parse(print(e), kVars);
    for (int k = 0; k < 100; ++k) {
      const double x[3] = {u(rng), u(rng), u(rng)};
      const double a = e.evaluate(x), b = r.evaluate(x);
      CHECK(std::abs(a - b) <= 1e-15 * std::max(1.0, std::abs(a)));
    }
  }
}

TEST_CASE("unknown variable in differentiate") {
  CHECK_THROWS_AS(differentiate(parse("p", kVars), "w"), Error);
}
