#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ccharts/expr.hpp"

using ccharts::DomainError;
using ccharts::Expr;
using ccharts::ParseError;

namespace {
double ev(const Expr& e, std::initializer_list<double> x) {
  std::vector<double> v(x);
  return e.eval(v);
}
}  // namespace

TEST_CASE("parse and evaluate basic arithmetic") {
  CHECK(ev(Expr::parse("x1^2", 1), {3}) == doctest::Approx(9));
  CHECK(ev(Expr::parse("-x2/2", 3), {1, 4, 0}) == doctest::Approx(-2));
  CHECK(ev(Expr::parse("sin(x1)*x3", 3), {0, 7, 5}) == doctest::Approx(0));
  CHECK(ev(Expr::parse("x1*x2", 2), {2, 3}) == doctest::Approx(6));
  CHECK(ev(Expr::parse("exp(0*x1)", 1), {5}) == doctest::Approx(1));
  CHECK(ev(Expr::parse("1+2*3", 1), {0}) == doctest::Approx(7));
  CHECK(ev(Expr::parse("(1+2)*3", 1), {0}) == doctest::Approx(9));
  CHECK(ev(Expr::parse("2^3", 1), {0}) == doctest::Approx(8));
  CHECK(ev(Expr::parse("-x1^2", 1), {2}) == doctest::Approx(-4));  // ^ over unary -
  CHECK(ev(Expr::parse("8/4/2", 1), {0}) == doctest::Approx(1));   // left assoc
  CHECK(ev(Expr::parse("x1^-1", 1), {4}) == doctest::Approx(0.25));
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(ev(Expr::parse("1/x1", 1), {0}), DomainError);
  CHECK_THROWS_AS(ev(Expr::parse("log(x1)", 1), {-1}), DomainError);
  CHECK_THROWS_AS(ev(Expr::parse("log(x1)", 1), {0}), DomainError);
  CHECK_THROWS_AS(ev(Expr::parse("sqrt(x1)", 1), {-2}), DomainError);
  CHECK_NOTHROW(ev(Expr::parse("sqrt(x1)", 1), {2}));
}

TEST_CASE("parse errors carry byte offsets") {
  CHECK_THROWS_AS(Expr::parse("", 1), ParseError);
  CHECK_THROWS_AS(Expr::parse("x1 +", 1), ParseError);
  CHECK_THROWS_AS(Expr::parse("foo(x1)", 1), ParseError);
  CHECK_THROWS_AS(Expr::parse("x5", 3), ParseError);
  CHECK_THROWS_AS(Expr::parse("x1^x1", 1), ParseError);  // non-integer exponent
  CHECK_THROWS_AS(Expr::parse("x1 x2", 2), ParseError);
  try {
    Expr::parse("x1 + @", 1);
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.offset == 5);
  }
}

TEST_CASE("symbolic differentiation on the spec cases") {
  auto d = Expr::parse("x1^2", 1).differentiate(1);
  CHECK(ev(d, {3}) == doctest::Approx(6));
  CHECK(Expr::parse("x1", 2).differentiate(2).is_zero());
  CHECK(ev(Expr::parse("sin(x1)", 1).differentiate(1), {0}) == doctest::Approx(1));
  // abs: sign(u)*u', errors at 0
  auto da = Expr::parse("abs(x1)", 1).differentiate(1);
  CHECK(ev(da, {2}) == doctest::Approx(1));
  CHECK(ev(da, {-2}) == doctest::Approx(-1));
  CHECK_THROWS_AS(ev(da, {0}), DomainError);
}

namespace {

// Random small ASTs for the derivative-vs-finite-difference property.
Expr random_expr(std::mt19937_64& rng, int n, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 7);
  std::uniform_real_distribution<double> cst(-2.0, 2.0);
  std::uniform_int_distribution<int> var(1, n);
  switch (pick(rng)) {
    case 0: return Expr::constant(cst(rng));
    case 1: return Expr::variable(var(rng), n);
    case 2: return random_expr(rng, n, depth - 1) + random_expr(rng, n, depth - 1);
    case 3: return random_expr(rng, n, depth - 1) - random_expr(rng, n, depth - 1);
    case 4: return random_expr(rng, n, depth - 1) * random_expr(rng, n, depth - 1);
    case 5: {  // sin(sub)
      std::string s = "sin(" + random_expr(rng, n, depth - 1).print() + ")";
      return Expr::parse(s, n);
    }
    case 6: {
      std::string s = "cos(" + random_expr(rng, n, depth - 1).print() + ")";
      return Expr::parse(s, n);
    }
    default: {
      std::string s = "(" + random_expr(rng, n, depth - 1).print() + ")^2";
      return Expr::parse(s, n);
    }
  }
}

}  // namespace

TEST_CASE("derivative matches central finite differences on random ASTs") {
  std::mt19937_64 rng(20240817);
  std::uniform_real_distribution<double> pt(-1.0, 1.0);
  const int n = 3;
  int checked = 0;
  for (int trial = 0; trial < 120 && checked < 1000; ++trial) {
    Expr e = random_expr(rng, n, 3);
    std::vector<Expr> grads;
    for (int k = 1; k <= n; ++k) grads.push_back(e.differentiate(k));
    for (int rep = 0; rep < 12; ++rep) {
      std::vector<double> x = {pt(rng), pt(rng), pt(rng)};
      for (int k = 1; k <= n; ++k) {
        const double h = 1e-5;
        std::vector<double> xp = x, xm = x;
        xp[k - 1] += h;
        xm[k - 1] -= h;
        double fd, an;
        try {
          fd = (e.eval(xp) - e.eval(xm)) / (2 * h);
          an = grads[k - 1].eval(x);
        } catch (const DomainError&) {
          continue;  // away from singular points only
        }
        double scale = std::max({1.0, std::abs(fd), std::abs(an)});
        CHECK(std::abs(fd - an) / scale <= 1e-6);
        ++checked;
      }
    }
  }
  CHECK(checked >= 1000);
}

TEST_CASE("print/parse round trip agrees at random points") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pt(-1.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    Expr e = random_expr(rng, 3, 3);
    Expr back = Expr::parse(e.print(), 3);
    for (int rep = 0; rep < 8; ++rep) {
      std::vector<double> x = {pt(rng), pt(rng), pt(rng)};
      double a, b;
      try {
        a = e.eval(x);
        b = back.eval(x);
      } catch (const DomainError&) {
        continue;
      }
      CHECK(std::abs(a - b) <= 1e-15 * std::max(1.0, std::abs(a)));
    }
  }
}
