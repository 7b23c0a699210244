#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ccharts/ccmetric.hpp"

using namespace ccharts;

namespace {

Vec v1(double a) {
  Vec v(1);
  v << a;
  return v;
}
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

VectorSystem euclidean2(double half = 4.0) {
  return VectorSystem({VectorField::from_strings({"1", "0"}, 2, "e1"),
                       VectorField::from_strings({"0", "1"}, 2, "e2")},
                      Box::cube(2, half));
}

VectorSystem heisenberg2gen(double half = 2.5) {
  return VectorSystem({VectorField::from_strings({"1", "0", "-x2/2"}, 3, "X"),
                       VectorField::from_strings({"0", "1", "x1/2"}, 3, "Y")},
                      Box::cube(3, half));
}

}  // namespace

TEST_CASE("cc_distance on Euclidean fields") {
  auto E = euclidean2();
  double d = cc_distance(E, v2(0, 0), v2(0.3, 0.4));
  CHECK(d >= 0.5 - 1e-9);
  CHECK(d <= 0.52);
  CHECK(cc_distance(E, v2(0.2, -0.1), v2(0.2, -0.1)) == doctest::Approx(0));
}

TEST_CASE("cc_distance scales inversely with the field magnitude") {
  VectorSystem S({VectorField::from_strings({"0.1"}, 1, "slow")},
                 Box::cube(1, 4.0));
  double d = cc_distance(S, v1(0), v1(0.1));
  CHECK(d >= 1.0 - 1e-9);
  CHECK(d <= 1.04);
}

TEST_CASE("ball membership on Euclidean fields") {
  auto E = euclidean2();
  Vec y = v2(0.3 * 0.6, 0.3 * 0.8);  // |y| = 0.3
  CHECK(ball_membership(E, v2(0, 0), 0.5, y));
  CHECK_FALSE(ball_membership(E, v2(0, 0), 0.2, y));
}

TEST_CASE("Heisenberg 2-generator membership flips with the vertical cost") {
  auto H = heisenberg2gen();
  Vec y = v3(0, 0, 0.01);  // true distance ~ sqrt(4 pi 0.01) ~ 0.354
  CHECK_FALSE(ball_membership(H, v3(0, 0, 0), 0.05, y));
  CHECK(ball_membership(H, v3(0, 0, 0), 0.8, y));
}

TEST_CASE("membership is monotone in delta") {
  auto E = euclidean2();
  Vec y = v2(0.25, 0.10);
  bool prev = false;
  for (double delta : {0.1, 0.2, 0.3, 0.5, 0.8}) {
    bool m = ball_membership(E, v2(0, 0), delta, y);
    if (prev) CHECK(m);
    prev = m;
  }
  CHECK(prev);
}

TEST_CASE("ball volume: Euclidean disc area") {
  auto E = euclidean2();
  BallEstimate est = ball_volume(E, v2(0, 0), 1.0, 100000, 7);
  CHECK(std::abs(est.volume - M_PI) <= 3 * est.stderr_);
  CHECK(est.stderr_ > 0);

  BallEstimate tiny = ball_volume(E, v2(0, 0), 0.05, 20000, 7);
  CHECK(tiny.volume < 0.05 * est.volume);
}

TEST_CASE("ball volume determinism: same seed, same N, bit-identical") {
  auto E = euclidean2();
  BallEstimate a = ball_volume(E, v2(0, 0), 0.8, 20000, 99);
  BallEstimate b = ball_volume(E, v2(0, 0), 0.8, 20000, 99);
  CHECK(a.volume == b.volume);
  CHECK(a.stderr_ == b.stderr_);

  BallEstimate c = ball_volume(E, v2(0, 0), 0.8, 20000, 99, {}, 4);
  CHECK(a.volume == c.volume);  // thread count never changes results
}

TEST_CASE("definitional identity: B_{delta X}(x, 1) == B_X(x, delta)") {
  auto E = euclidean2();
  const double delta = 0.7;
  std::vector<VectorField> scaled;
  for (const auto& f : E.fields()) scaled.push_back(f.scaled(delta));
  VectorSystem S(scaled, E.domain());
  BallEstimate lhs = ball_volume(S, v2(0, 0), 1.0, 40000, 11);
  BallEstimate rhs = ball_volume(E, v2(0, 0), delta, 40000, 12);
  CHECK(std::abs(lhs.volume - rhs.volume) <=
        2 * (lhs.stderr_ + rhs.stderr_));
}

TEST_CASE("doubling ratios for Euclidean balls") {
  auto E = euclidean2();
  double r2 = doubling_ratio(E, v2(0, 0), 0.4, 60000, 3);
  CHECK(r2 == doctest::Approx(4.0).epsilon(0.10));

  VectorSystem E3({VectorField::from_strings({"1", "0", "0"}, 3),
                   VectorField::from_strings({"0", "1", "0"}, 3),
                   VectorField::from_strings({"0", "0", "1"}, 3)},
                  Box::cube(3, 4.0));
  double r3 = doubling_ratio(E3, v3(0, 0, 0), 0.4, 60000, 3);
  CHECK(r3 == doctest::Approx(8.0).epsilon(0.10));
}

TEST_CASE("refinement never increases the estimate beyond integrator noise") {
  auto E = euclidean2();
  CCGraphParams coarse;
  coarse.cells_per_axis = 96;
  coarse.n_dirs = 48;
  CCGraphParams fine;  // 2x nodes, 2x neighbors, warm-started from coarse
  fine.cells_per_axis = 192;
  fine.n_dirs = 96;
  Box box = Box::cube(2, 1.4);
  for (auto [a, b] : {std::pair{v2(0, 0), v2(0.3, 0.4)},
                      std::pair{v2(-0.5, 0.2), v2(0.4, -0.3)}}) {
    CCGraph gc = cc_flood(E, a, 1.3, box, coarse);
    CCGraph gf = cc_flood(E, a, 1.3, box, fine, &gc);
    double dc = gc.query(b);
    double df = gf.query(b);
    CHECK(df <= dc + 1e-6);
    CHECK(df < CCGraph::kUnreachable);
  }
}

TEST_CASE("symmetry and triangle inequality within estimator slack") {
  VectorSystem S({VectorField::from_strings({"1+0.2*sin(x2)", "0"}, 2),
                  VectorField::from_strings({"0", "1+0.1*cos(x1)"}, 2)},
                 Box::cube(2, 4.0));
  Vec x = v2(0, 0), y = v2(0.4, 0.1), z = v2(0.1, 0.5);
  double xy = cc_distance(S, x, y);
  double yx = cc_distance(S, y, x);
  CHECK(std::abs(xy - yx) <= 0.02 * (0.5 * (xy + yx)));

  double xz = cc_distance(S, x, z);
  double yz = cc_distance(S, y, z);
  CHECK(xz <= xy + yz + 0.02 * (xy + yz));
}

TEST_CASE("containment and engulfing for the Euclidean graded family") {
  auto family = [](double delta) {
    return VectorSystem(
        {VectorField::from_strings({"1", "0"}, 2).scaled(delta),
         VectorField::from_strings({"0", "1"}, 2).scaled(delta)},
        Box::cube(2, 6.0));
  };
  // graded degrees all 1: B1 = 2, b1 = 1/2, k = 2, C = 4
  auto rep = containment_check(family, v2(0, 0), {0.1, 0.2, 0.25}, 4.0, 12, 5);
  CHECK(rep.pairs_checked > 0);
  CHECK(rep.containment_violations == 0);
  CHECK(rep.engulfing_checked > 0);
  CHECK(rep.engulfing_violations == 0);
}

TEST_CASE("csv row for ball estimates") {
  auto E = euclidean2();
  BallEstimate est = ball_volume(E, v2(0, 0), 0.3, 2000, 5);
  std::ostringstream os;
  BallEstimate::write_csv_header(os);
  est.write_csv_row(os);
  CHECK(os.str().find("center,delta,volume") == 0);
  CHECK(os.str().find("0.3") != std::string::npos);
}
