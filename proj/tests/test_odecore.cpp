#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ccharts/odecore.hpp"

using namespace ccharts;

namespace {

Mat m1(double v) {
  Mat m(1, 1);
  m << v;
  return m;
}

// n = 1, C(x) = x: the scalar singular ODE d/dr (rA) = -A^2 - CA - C.
MatrixField scalar_C() {
  return [](const Vec& x) { return m1(x[0]); };
}

// Independent oracle: match d/dr(rA) = -A^2 - CA - C order by order.
// A(x) = sum a_k x^k with (k+1) a_k = -sum_{i+j=k} a_i a_j - a_{k-1} - [k==1].
double series_oracle(double x, int order = 10) {
  std::vector<double> a(order + 1, 0.0);
  for (int k = 1; k <= order; ++k) {
    double rhs = 0.0;
    for (int i = 1; i < k; ++i) rhs -= a[i] * a[k - i];
    if (k >= 2) rhs -= a[k - 1];
    if (k == 1) rhs -= 1.0;
    a[k] = rhs / (k + 1);
  }
  double v = 0.0;
  for (int k = order; k >= 1; --k) v = (v + a[k]) * x;
  return v;
}

}  // namespace

TEST_CASE("series oracle sanity: leading coefficients") {
  // a1 = -1/2, a2 = 1/12, a3 = 0 from the recurrence
  double x = 1e-3;
  CHECK(series_oracle(x) == doctest::Approx(-x / 2 + x * x / 12).epsilon(1e-9));
}

TEST_CASE("estimate_D") {
  auto zero = [](const Vec&) { return m1(0.0); };
  CHECK(estimate_D(zero, 1, 0.5, 16) == doctest::Approx(0.0));

  CHECK(estimate_D(scalar_C(), 1, 0.1, 16) == doctest::Approx(1.0));

  auto bad = [](const Vec&) { return m1(0.5); };
  CHECK_THROWS_AS(estimate_D(bad, 1, 0.5, 8), Error);
}

TEST_CASE("estimate_D on a linear pencil matches a direction sweep") {
  // C(x) = M (u . x) in n = 2
  Mat M(2, 2);
  M << 0.7, -0.2, 0.4, 1.1;
  Vec u(2);
  u << 0.6, -0.8;
  auto C = [&](const Vec& x) { return Mat(M * u.dot(x)); };
  double D = estimate_D(C, 2, 1.0, 24);
  // dense sweep over unit directions
  double ref = 0.0;
  for (int i = 0; i < 2000; ++i) {
    double t = 2 * M_PI * i / 2000.0;
    Vec x(2);
    x << std::cos(t), std::sin(t);
    ref = std::max(ref, operator_norm(Mat(M * u.dot(x))));
  }
  CHECK(D == doctest::Approx(ref).epsilon(0.02));
}

TEST_CASE("apply_T on closed forms") {
  auto zeroC = [](const Vec&) { return m1(0.0); };
  GridFunction A0 = GridFunction::zeros(1, 0.5, 16, 1);
  GridFunction T0 = apply_T(A0, zeroC);
  CHECK(T0.sup_norm() == doctest::Approx(0.0));

  // T(0)(x) = -int_0^1 s x ds = -x/2 for C(x) = x
  GridFunction T1 = apply_T(GridFunction::zeros(1, 0.1, 16, 1), scalar_C());
  for (int flat = 0; flat < T1.node_count(); ++flat) {
    double x = T1.node_point(flat)[0];
    CHECK(T1.at_index(flat)(0, 0) == doctest::Approx(-x / 2).epsilon(1e-12));
  }
  // d(T(0), 0) <= D/2 (here exactly 1/2)
  CHECK(T1.weighted_sup() == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("weighted distance is a metric on grids") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  auto rand_grid = [&] {
    double slope = u(rng);
    return GridFunction::sample(1, 0.3, 8, [slope](const Vec& x) {
      return Mat(m1(slope * x[0]));
    });
  };
  GridFunction A = rand_grid();
  CHECK(weighted_distance(A, A) == doctest::Approx(0.0));

  GridFunction B = GridFunction::zeros(1, 0.3, 8, 1);
  GridFunction cx = GridFunction::sample(1, 0.3, 8, [](const Vec& x) {
    return Mat(m1(-1.7 * x[0]));
  });
  CHECK(weighted_distance(cx, B) == doctest::Approx(1.7));

  for (int t = 0; t < 20; ++t) {
    GridFunction X = rand_grid(), Y = rand_grid(), Z = rand_grid();
    double xy = weighted_distance(X, Y);
    double yx = weighted_distance(Y, X);
    CHECK(std::abs(xy - yx) <= 1e-12);
    CHECK(weighted_distance(X, Z) <= xy + weighted_distance(Y, Z) + 1e-12);
  }
}

TEST_CASE("picard_solve on C == 0 finishes immediately at A == 0") {
  auto zeroC = [](const Vec&) { return m1(0.0); };
  auto [A, rep] = picard_solve(zeroC, 1, 0.5, 16, 1e-10);
  CHECK(A.sup_norm() == doctest::Approx(0.0));
  CHECK(rep.iterations == 1);
}

TEST_CASE("picard_solve matches the power-series oracle on the scalar example") {
  auto [A, rep] = picard_solve(scalar_C(), 1, 0.1, 32, 1e-9);
  CHECK(rep.eta == doctest::Approx(0.1));  // 1/(10 D) with D = 1
  CHECK_FALSE(rep.eta_truncated);

  Vec p(1);
  p << 0.1;
  double got = A(p)(0, 0);
  CHECK(std::abs(got - series_oracle(0.1)) <= 2e-4);
  CHECK(std::abs(got - (-0.04917)) <= 2e-4);

  // proof bounds at every node, plus exact zero at the origin
  CHECK(rep.bounds_ok);
  for (int flat = 0; flat < A.node_count(); ++flat) {
    double x = std::abs(A.node_point(flat)[0]);
    double a = std::abs(A.at_index(flat)(0, 0));
    CHECK(a <= (5.0 / 8.0) * x + 1e-12);
    CHECK(a <= 1.0 / 16.0 + 1e-12);
    if (x == 0.0) CHECK(a == 0.0);
  }

  // successive distances decay by <= 1/5 plus interpolation slack
  const auto& d = rep.successive_distances;
  for (std::size_t k = 1; k < d.size(); ++k)
    if (d[k - 1] > 1e-12) CHECK(d[k] / d[k - 1] <= 0.2 + 0.05);

  // fixed point: d(T(A), A) <= 2 tol
  CHECK(rep.fixed_point_residual <= 2e-9);
}

TEST_CASE("uniqueness probe: a random admissible start converges to the same A") {
  auto C = scalar_C();
  auto [A, rep] = picard_solve(C, 1, 0.1, 32, 1e-9);

  GridFunction B = GridFunction::sample(1, rep.eta, 32, [](const Vec& x) {
    return Mat(m1(0.05 * x[0]));  // admissible: B(0)=0, |B| <= 0.1 |x|-proportional
  });
  for (int k = 0; k < 40; ++k) {
    GridFunction nb = apply_T(B, C);
    double d = weighted_distance(nb, B);
    B = nb;
    if (d < 1e-9) break;
  }
  CHECK(weighted_distance(B, A) <= 3e-9);
}

TEST_CASE("contraction diagnostic stays within the proof bound plus slack") {
  double worst = contraction_diagnostic(scalar_C(), 1, 0.1, 32, 50, 1234);
  CHECK(worst > 0.0);
  CHECK(worst <= 0.25);
}

TEST_CASE("ode_residual") {
  auto zeroC = [](const Vec&) { return m1(0.0); };
  GridFunction A0 = GridFunction::zeros(1, 1.0, 16, 1);
  CHECK(ode_residual(A0, zeroC) == doctest::Approx(0.0));

  // solved scalar example at resolution 64
  auto [A, rep] = picard_solve(scalar_C(), 1, 0.1, 64, 1e-10);
  CHECK(ode_residual(A, scalar_C()) <= 1e-4);

  // detector sensitivity: perturbing the zero solution by 0.01 x on eta = 1
  GridFunction P = GridFunction::sample(1, 1.0, 32, [](const Vec& x) {
    return Mat(m1(0.01 * x[0]));
  });
  CHECK(ode_residual(P, zeroC) >= 0.005);
}

TEST_CASE("picard_solve truncates eta to 1/(10 D) and warns") {
  auto [A, rep] = picard_solve(scalar_C(), 1, 0.5, 16, 1e-8);
  CHECK(rep.eta_truncated);
  CHECK(rep.eta == doctest::Approx(0.1).epsilon(0.03));
}
