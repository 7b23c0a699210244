#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ccharts/fields.hpp"

using namespace ccharts;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

VectorSystem heisenberg() {
  auto X = VectorField::from_strings({"1", "0", "-x2/2"}, 3, "X");
  auto Y = VectorField::from_strings({"0", "1", "x1/2"}, 3, "Y");
  auto T = VectorField::from_strings({"0", "0", "1"}, 3, "T");
  return VectorSystem({X, Y, T}, Box::cube(3, 2.0));
}

}  // namespace

TEST_CASE("jacobian: exact and finite-difference paths") {
  auto X = VectorField::from_strings({"x1^2", "0"}, 2);
  Mat J = X.jacobian(v2(3, 1));
  CHECK(J(0, 0) == doctest::Approx(6));
  CHECK(J(0, 1) == doctest::Approx(0));
  CHECK(J(1, 0) == doctest::Approx(0));
  CHECK(J(1, 1) == doctest::Approx(0));

  auto C = VectorField::constant(v2(1, 0));
  CHECK(C.jacobian(v2(0.3, -0.7)).norm() == doctest::Approx(0));

  auto H = heisenberg();
  CHECK(H.field(1).jacobian(v3(0.2, 0.5, -1)).coeff(2, 1) == doctest::Approx(-0.5));

  // native field without exact Jacobian: FD matches the Expr-backed one
  auto Xn = VectorField::native(2, [](const Vec& x) {
    return v2(x[0] * x[0], std::sin(x[1]));
  });
  auto Xe = VectorField::from_strings({"x1^2", "sin(x2)"}, 2);
  Vec p = v2(0.4, -0.9);
  CHECK((Xn.jacobian(p) - Xe.jacobian(p)).norm() < 1e-8);
}

TEST_CASE("commutator") {
  auto dx = VectorField::from_strings({"1", "0"}, 2);
  auto dy = VectorField::from_strings({"0", "1"}, 2);
  CHECK(commutator(dx, dy, v2(0.3, 0.9)).norm() == doctest::Approx(0));

  auto H = heisenberg();
  Vec br = commutator(H.field(1), H.field(2), v3(0.7, -0.3, 0.1));
  CHECK((br - v3(0, 0, 1)).norm() < 1e-12);

  auto xdy = VectorField::from_strings({"0", "x1"}, 2);
  Vec b2 = commutator(dx, xdy, v2(1.5, -2.0));
  CHECK((b2 - v2(0, 1)).norm() < 1e-12);
}

TEST_CASE("structure coefficients: Heisenberg and commuting systems") {
  auto H = heisenberg();
  auto c = structure_coefficients(H, v3(0.3, 0.4, -0.2));
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) {
        double want = 0.0;
        if (j == 0 && k == 1 && l == 2) want = 1.0;
        if (j == 1 && k == 0 && l == 2) want = -1.0;
        CHECK(c[j][k][l] == doctest::Approx(want).epsilon(1e-9));
      }

  auto E = VectorSystem({VectorField::from_strings({"1", "0"}, 2),
                         VectorField::from_strings({"0", "1"}, 2)},
                        Box::cube(2, 1.0));
  auto ce = structure_coefficients(E, v2(0.1, 0.2));
  for (auto& a : ce)
    for (auto& b : a)
      for (double x : b) CHECK(std::abs(x) < 1e-12);
}

TEST_CASE("structure coefficients: antisymmetry of the min-norm solution") {
  auto A = VectorField::from_strings({"1", "x2"}, 2);
  auto B = VectorField::from_strings({"x1", "1"}, 2);
  auto C = VectorField::from_strings({"1", "1"}, 2);
  VectorSystem S({A, B, C}, Box::cube(2, 1.5));
  auto c = structure_coefficients(S, v2(0.37, -0.52));
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l)
        CHECK(c[j][k][l] == doctest::Approx(-c[k][j][l]).epsilon(1e-10));
}

TEST_CASE("user-supplied structure coefficients are validated at load") {
  auto H = heisenberg();
  // correct tensor: c_{1,2}^3 = 1 = -c_{2,1}^3
  std::vector<std::vector<std::vector<Expr>>> good(
      3, std::vector<std::vector<Expr>>(3, std::vector<Expr>(3, Expr::constant(0))));
  good[0][1][2] = Expr::constant(1);
  good[1][0][2] = Expr::constant(-1);
  CHECK_NOTHROW(H.set_structure_exprs(good));

  auto H2 = heisenberg();
  auto bad = good;
  bad[0][1][2] = Expr::constant(2);
  CHECK_THROWS_AS(H2.set_structure_exprs(bad), Error);
}

TEST_CASE("wedge determinants") {
  VectorSystem S({VectorField::constant(v2(1, 0)), VectorField::constant(v2(0, 2))},
                 Box::cube(2, 1.0));
  CHECK(wedge_det(S, {1, 2}, v2(0, 0)) == doctest::Approx(2));
  CHECK(wedge_det(S, {1, 1}, v2(0, 0)) == doctest::Approx(0));
  CHECK(wedge_det(S, {2, 1}, v2(0, 0)) == doctest::Approx(-2));
}

TEST_CASE("wedge multilinearity on random instances") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 50; ++trial) {
    Vec a = v3(u(rng), u(rng), u(rng)), b = v3(u(rng), u(rng), u(rng)),
        c = v3(u(rng), u(rng), u(rng));
    double alpha = u(rng), beta = u(rng);
    VectorSystem S({VectorField::constant(a), VectorField::constant(b),
                    VectorField::constant(c),
                    VectorField::constant(Vec(alpha * a + beta * b))},
                   Box::cube(3, 1.0));
    Vec x = v3(0, 0, 0);
    double lhs = wedge_det(S, {4, 2, 3}, x);
    double rhs = alpha * wedge_det(S, {1, 2, 3}, x) + beta * wedge_det(S, {2, 2, 3}, x);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("select_J0") {
  VectorSystem S({VectorField::constant(v2(1, 0)), VectorField::constant(v2(0, 1)),
                  VectorField::constant(v2(10, 0))},
                 Box::cube(2, 1.0));
  // brute force over sorted pairs: (1,2)->1, (1,3)->0, (2,3)->-10
  auto sel = select_J0(S, v2(0, 0), 0.5);
  CHECK(sel.J0 == IndexTuple{2, 3});
  CHECK(sel.ratio == doctest::Approx(1.0));

  VectorSystem E({VectorField::constant(v2(1, 0)), VectorField::constant(v2(0, 1))},
                 Box::cube(2, 1.0));
  CHECK(select_J0(E, v2(0.5, 0.5), 1.0).J0 == IndexTuple{1, 2});

  // uniform scaling leaves the argmax unchanged
  VectorSystem S7({VectorField::constant(v2(7, 0)), VectorField::constant(v2(0, 7)),
                   VectorField::constant(v2(70, 0))},
                  Box::cube(2, 1.0));
  CHECK(select_J0(S7, v2(0, 0), 0.5).J0 == sel.J0);

  VectorSystem degenerate(
      {VectorField::constant(v2(1, 0)), VectorField::constant(v2(2, 0))},
      Box::cube(2, 1.0));
  CHECK_THROWS_AS(select_J0(degenerate, v2(0, 0), 1.0), SpanError);
}

TEST_CASE("cramer coefficients") {
  std::vector<VectorField> basis = {VectorField::constant(v2(1, 0)),
                                    VectorField::constant(v2(0, 2))};
  auto y = VectorField::constant(v2(3, 4));
  Vec b = cramer_coeffs(basis, y, v2(0, 0));
  CHECK(b[0] == doctest::Approx(3));
  CHECK(b[1] == doctest::Approx(2));

  Vec e1 = cramer_coeffs(basis, basis[0], v2(0, 0));
  CHECK(e1[0] == doctest::Approx(1));
  CHECK(e1[1] == doctest::Approx(0));

  Vec z = cramer_coeffs(basis, VectorField::constant(v2(0, 0)), v2(0, 0));
  CHECK(z.norm() == doctest::Approx(0));

  std::vector<VectorField> sing = {VectorField::constant(v2(1, 0)),
                                   VectorField::constant(v2(2, 0))};
  CHECK_THROWS_AS(cramer_coeffs(sing, y, v2(0, 0)), SpanError);
}

TEST_CASE("cramer residual on random solvable instances") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 200; ++trial) {
    Mat M(3, 3);
    for (int i = 0; i < 9; ++i) M(i / 3, i % 3) = u(rng);
    double colmax = std::max({M.col(0).norm(), M.col(1).norm(), M.col(2).norm()});
    if (std::abs(M.determinant()) < 1e-8 * std::pow(colmax, 3)) continue;
    Vec y = v3(u(rng), u(rng), u(rng));
    Vec b = cramer_coeffs(M, y);
    CHECK((M * b - y).norm() <= 1e-10 * std::max(1.0, y.norm()));
  }
}

TEST_CASE("Jacobi identity for expression-backed smooth fields") {
  auto X = VectorField::from_strings({"x2^2", "x3", "1"}, 3);
  auto Y = VectorField::from_strings({"x1", "x1*x3", "x2"}, 3);
  auto Z = VectorField::from_strings({"sin(x1)", "x2", "x1*x2"}, 3);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);

  // brackets of Expr fields stay evaluatable through nested FD of exact parts
  auto lie = [&](const VectorField& A, const VectorField& B) {
    return VectorField::native(3, [&A, &B](const Vec& x) {
      return commutator(A, B, x);
    });
  };
  for (int trial = 0; trial < 25; ++trial) {
    Vec x = v3(u(rng), u(rng), u(rng));
    Vec sum = commutator(X, lie(Y, Z), x) + commutator(Y, lie(Z, X), x) +
              commutator(Z, lie(X, Y), x);
    CHECK(sum.norm() <= 1e-6);
  }
}
