#include <doctest.h>

#include <cmath>
#include <random>

#include "regkit/errors.hpp"
#include "regkit/expr.hpp"
#include "oracles.hpp"

using namespace regkit;
using testing_support::random_expr;
using testing_support::GradientCheck;
using testing_support::InstanceCount;

namespace {

Expr X(int i) { return Expr::variable(Axis::x, i); }
Expr Y(int i) { return Expr::variable(Axis::y, i); }
Expr C(double v) { return Expr::constant(v); }

}  // namespace

TEST_CASE("parser builds the expected trees") {
  CHECK(parse_expr("x1 - y1", 1, 1) == Expr::binary(Expr::Kind::sub, X(1), Y(1)));
  CHECK(parse_expr("y1 - y1^2", 1, 1) == Expr::binary(Expr::Kind::sub, Y(1), Expr::power(Y(1), 2)));
  Expr inner = Expr::binary(Expr::Kind::sub, Expr::binary(Expr::Kind::add, X(1), Y(1)), C(2));
  CHECK(parse_expr("(x1 + y1 - 2)^2", 1, 1) == Expr::power(inner, 2));
  CHECK(parse_expr("-3", 1, 1) == C(-3));
  CHECK(parse_expr("--y1", 1, 1) == Expr::negate(Expr::negate(Y(1))));
  CHECK(parse_expr("2*x1*y1", 1, 1) ==
        Expr::binary(Expr::Kind::mul, Expr::binary(Expr::Kind::mul, C(2), X(1)), Y(1)));
  CHECK(parse_expr("y1^-2", 1, 1) == Expr::power(Y(1), -2));
  CHECK(parse_expr("1.5e-3", 0, 1) == C(1.5e-3));
}

TEST_CASE("parser errors") {
  SUBCASE("syntax error reports position and expected tokens") {
    try {
      parse_expr("x1 + * y1", 1, 1);
      FAIL("no exception");
    } catch (const SyntaxError& e) {
      CHECK(e.position() == 5);
      CHECK_FALSE(e.expected().empty());
    }
    CHECK_THROWS_AS(parse_expr("(x1", 1, 1), SyntaxError);
    CHECK_THROWS_AS(parse_expr("", 1, 1), SyntaxError);
    CHECK_THROWS_AS(parse_expr("x1 y1", 1, 1), SyntaxError);
    CHECK_THROWS_AS(parse_expr("sin(x1)", 1, 1), SyntaxError);
  }
  SUBCASE("index out of range") {
    CHECK_THROWS_AS(parse_expr("y3", 1, 2), IndexError);
    CHECK_THROWS_AS(parse_expr("x2", 1, 2), IndexError);
    CHECK_THROWS_AS(parse_expr("y0", 1, 2), IndexError);
  }
  SUBCASE("exponent must be an integer literal") {
    CHECK_THROWS_AS(parse_expr("y1^1.5", 1, 1), ExponentError);
    CHECK_THROWS_AS(parse_expr("y1^12", 1, 1), ExponentError);
    CHECK_THROWS_AS(parse_expr("y1^x1", 1, 1), SyntaxError);
  }
}

TEST_CASE("evaluation") {
  Vec x{0.25};
  Vec y{0.5};
  CHECK(parse_expr("y1 - y1^2", 1, 1).eval(x, y) == doctest::Approx(0.25));
  CHECK(parse_expr("x1 - y1", 1, 1).eval(Vec{0.0}, Vec{1.0}) == -1.0);
  CHECK(parse_expr("(x1+y1-2)^2", 1, 1).eval(x, y) == doctest::Approx(1.5625).epsilon(1e-15));
  CHECK_THROWS_AS(parse_expr("1/y1", 1, 1).eval(x, Vec{0.0}), DivisionByZero);
  CHECK_THROWS_AS(parse_expr("y1^-1", 1, 1).eval(x, Vec{0.0}), DivisionByZero);
  CompiledExpr ce(parse_expr("1/y1", 1, 1));
  CHECK(std::isinf(ce(x, Vec{0.0})));
}

TEST_CASE("gradients of the worked examples") {
  auto g = grad(parse_expr("y1 - y1^2", 1, 1), Axis::y, 1);
  REQUIRE(g.size() == 1);
  for (double v : {-1.0, 0.0, 0.3, 2.0}) CHECK(g[0].eval(Vec{0.0}, Vec{v}) == doctest::Approx(1.0 - 2.0 * v));
  auto g2 = grad(parse_expr("x1 - y1", 1, 1), Axis::y, 1);
  CHECK(g2[0].is_constant(-1.0));
  auto g3 = grad(parse_expr("(y1+1)^2 + (y2 - x1)^2", 1, 2), Axis::y, 2);
  REQUIRE(g3.size() == 2);
  Vec x{0.7};
  Vec y{-0.2, 1.9};
  CHECK(g3[0].eval(x, y) == doctest::Approx(2.0 * (y[0] + 1.0)));
  CHECK(g3[1].eval(x, y) == doctest::Approx(2.0 * (y[1] - x[0])));
  CHECK(derivative(parse_expr("x1*y1", 1, 1), Axis::x, 1) == Y(1));
}

TEST_CASE("smart constructors simplify") {
  CHECK(make_mul(C(0), Y(1)).is_constant(0));
  CHECK(make_mul(C(1), Y(1)) == Y(1));
  CHECK(make_add(Y(1), C(0)) == Y(1));
  CHECK(make_sub(C(0), Y(1)) == Expr::negate(Y(1)));
  CHECK(make_pow(Y(1), 1) == Y(1));
  CHECK(make_pow(Y(1), 0).is_constant(1));
  CHECK(simplify(parse_expr("0*y1 + 1*x1", 1, 1)) == X(1));
}

TEST_CASE("symbolic gradients match finite differences on 200 random expressions") {
  GradientCheck g = testing_support::gradient_suite(200);
  CHECK(g.expressions == 200);
  CHECK(g.partials == 800);
  INFO("worst case " << g.worst_case);
  CHECK(g.worst <= 1e-6);
}

TEST_CASE("print/parse round trip is exact on 500 random expressions") {
  InstanceCount r = testing_support::roundtrip_suite(500);
  CHECK(r.instances == 500);
  CHECK(r.failures == 0);
}

TEST_CASE("compiled and reference evaluation agree") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 300; ++k) {
    Expr e = random_expr(rng, 2, 3, 4);
    CompiledExpr ce(e);
    Vec x{regkit::uniform(rng, -2, 2), regkit::uniform(rng, -2, 2)};
    Vec y{regkit::uniform(rng, -2, 2), regkit::uniform(rng, -2, 2), regkit::uniform(rng, -2, 2)};
    double a = e.eval(x, y);
    double b = ce(x, y);
    CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
  }
}
