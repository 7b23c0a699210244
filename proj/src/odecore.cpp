#include "ccharts/odecore.hpp"

#include <cmath>
#include <random>

#include "ccharts/flows.hpp"

namespace ccharts {

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] for the orders we use.
void gauss_legendre(int k, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(k);
  weights.resize(k);
  // Newton on Legendre polynomials; k is small so this is exact enough.
  for (int i = 0; i < k; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (k + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= k; ++j) {
        double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      double dp = k * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = x;
    double p0 = 1.0, p1 = x;
    for (int j = 2; j <= k; ++j) {
      double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    double dp = k * (x * p1 - p0) / (x * x - 1.0);
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

}  // namespace

double estimate_D(const MatrixField& C, int n, double eta, int half_res) {
  Mat c0 = C(Vec::Zero(n));
  if (operator_norm(c0) > 1e-10)
    throw Error("estimate_D requires C(0) = 0 (got |C(0)| = " +
                std::to_string(operator_norm(c0)) + ")");
  GridFunction g = GridFunction::sample(n, eta, half_res, C);
  return g.weighted_sup();
}

GridFunction apply_T(const GridFunction& A, const MatrixField& C, int quad_points,
                     int quad_panels) {
  std::vector<double> gl_x, gl_w;
  gauss_legendre(quad_points, gl_x, gl_w);

  const int n = A.dim();
  GridFunction out(n, A.radius(), A.half_res(), A.rows(), A.cols());
  for (int flat = 0; flat < A.node_count(); ++flat) {
    Vec x = out.node_point(flat);
    Mat acc = Mat::Zero(A.rows(), A.cols());
    for (int panel = 0; panel < quad_panels; ++panel) {
      double lo = static_cast<double>(panel) / quad_panels;
      double hi = static_cast<double>(panel + 1) / quad_panels;
      double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
      for (int i = 0; i < quad_points; ++i) {
        double s = mid + half * gl_x[i];
        Vec sx = s * x;
        Mat As = A(sx);
        Mat Cs = C(sx);
        acc += (gl_w[i] * half) * (-As * As - Cs * As - Cs);
      }
    }
    out.at_index(flat) = acc;
  }
  // T(A)(0) = -A(0)^2 - C(0)A(0) - C(0); with admissible inputs this is
  // exactly 0, and we pin it so A(0) = 0 holds exactly through iteration.
  // (origin is always a node: flat index of the center)
  Vec zero = Vec::Zero(n);
  Mat a0 = A(zero), c0 = C(zero);
  Mat t0 = -a0 * a0 - c0 * a0 - c0;
  for (int flat = 0; flat < out.node_count(); ++flat)
    if (out.node_point(flat).norm() == 0.0) out.at_index(flat) = t0;
  return out;
}

std::pair<GridFunction, PicardReport> picard_solve(const MatrixField& C, int n,
                                                   double eta_requested,
                                                   int half_res, double tol,
                                                   int quad_points,
                                                   int quad_panels) {
  if (eta_requested <= 0) throw Error("picard_solve: eta must be positive");
  PicardReport rep;
  double D = estimate_D(C, n, eta_requested, half_res);
  double eta = eta_requested;
  if (D > 0 && eta > 1.0 / (10.0 * D)) {
    eta = 1.0 / (10.0 * D);
    rep.eta_truncated = true;
  }
  rep.D = D;
  rep.eta = eta;

  GridFunction A = GridFunction::zeros(n, eta, half_res, C(Vec::Zero(n)).rows());
  GridFunction next = apply_T(A, C, quad_points, quad_panels);
  double d1 = weighted_distance(next, A);
  rep.successive_distances.push_back(d1);
  A = next;
  rep.iterations = 1;
  if (d1 >= tol) {
    // guaranteed rate 1/5: d_k <= d_1 5^{-(k-1)}; cap so tol is reachable
    int cap = static_cast<int>(std::ceil(
                  std::log(tol * 0.8 / std::max(d1, tol)) / std::log(0.2))) +
              5;
    int bad_ratio_streak = 0;
    double prev = d1;
    for (int k = 1;; ++k) {
      next = apply_T(A, C, quad_points, quad_panels);
      double d = weighted_distance(next, A);
      rep.successive_distances.push_back(d);
      A = next;
      ++rep.iterations;
      if (d < tol) break;
      double ratio = prev > 0 ? d / prev : 0.0;
      bad_ratio_streak = ratio > 0.5 ? bad_ratio_streak + 1 : 0;
      if (bad_ratio_streak >= 3)
        throw ContractionError(
            "Picard iteration is not contracting (ratio " + std::to_string(ratio) +
            "); grid too coarse or D misestimated");
      if (k >= cap)
        throw ContractionError("Picard iteration exceeded its guaranteed cap");
      prev = d;
    }
  }
  rep.fixed_point_residual = weighted_distance(apply_T(A, C, quad_points, quad_panels), A);
  rep.sup_A = A.sup_norm();
  rep.weighted_sup_A = A.weighted_sup();

  // bounds from the existence proof: |A(x)| <= (5/8) D |x| and <= 1/16
  bool ok = true;
  const double slack = 1.0 + 1e-6;
  for (int flat = 0; flat < A.node_count() && ok; ++flat) {
    if (!A.node_in_ball(flat)) continue;
    double r = A.node_point(flat).norm();
    double a = operator_norm(A.at_index(flat));
    if (a > slack * (5.0 / 8.0) * D * r + 1e-12) ok = false;
    if (a > slack / 16.0) ok = false;
  }
  rep.bounds_ok = ok;
  return {std::move(A), rep};
}

double contraction_diagnostic(const MatrixField& C, int n, double eta,
                              int half_res, int trials, std::uint64_t seed,
                              int quad_points, int quad_panels) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int dim = static_cast<int>(C(Vec::Zero(n)).rows());

  // Random admissible element of the weighted space: A(x) = sum_l x_l M_l,
  // scaled so |A(x)| <= min(cap |x|, 1/10) with A(0) = 0.
  auto random_member = [&]() {
    std::vector<Mat> Ms(n);
    for (int l = 0; l < n; ++l) {
      Ms[l] = Mat::NullaryExpr(dim, dim, [&]() { return u(rng); });
    }
    double scale = 0.0;
    for (int l = 0; l < n; ++l) scale += operator_norm(Ms[l]);
    double cap = 0.1 / (scale * eta + 1e-300);
    return GridFunction::sample(n, eta, half_res, [&Ms, cap, dim, n](const Vec& x) {
      Mat v = Mat::Zero(dim, dim);
      for (int l = 0; l < n; ++l) v += x[l] * Ms[l];
      return Mat(cap * v);
    });
  };

  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    GridFunction A = random_member();
    GridFunction B = random_member();
    double dab = weighted_distance(A, B);
    if (dab <= 1e-14) continue;  // 0/0 guard
    GridFunction TA = apply_T(A, C, quad_points, quad_panels);
    GridFunction TB = apply_T(B, C, quad_points, quad_panels);
    worst = std::max(worst, weighted_distance(TA, TB) / dab);
  }
  return worst;
}

double ode_residual(const GridFunction& A, const MatrixField& C, int theta_samples,
                    int r_steps) {
  const int n = A.dim();
  const double eta = A.radius();
  auto dirs = sphere_directions(n, theta_samples);
  const double hr = eta / (r_steps * 8.0);
  double worst = 0.0;
  for (const Vec& th : dirs) {
    for (int i = 1; i < r_steps; ++i) {
      double r = eta * i / r_steps;
      if (r + hr > eta) continue;
      auto g = [&](double rr) { return Mat(rr * A(Vec(rr * th))); };
      Mat drdrA = (g(r + hr) - g(r - hr)) / (2 * hr);
      Mat Ar = A(Vec(r * th));
      Mat Cr = C(Vec(r * th));
      Mat res = drdrA + Ar * Ar + Cr * Ar + Cr;
      worst = std::max(worst, operator_norm(res));
    }
  }
  return worst;
}

}  // namespace ccharts
