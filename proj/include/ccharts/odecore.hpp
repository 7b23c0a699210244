#ifndef CCHARTS_ODECORE_HPP
#define CCHARTS_ODECORE_HPP

#include <cstdint>
#include <functional>

#include "ccharts/grid.hpp"

namespace ccharts {

/// Evaluatable matrix field C(x) with C(0) = 0 and |C(x)| <= D|x|.
using MatrixField = std::function<Mat(const Vec&)>;

struct ContractionError : Error {
  using Error::Error;
};

/// max over grid nodes x != 0 of ||C(x)||_op / |x|; insists C(0) = 0.
double estimate_D(const MatrixField& C, int n, double eta, int half_res);

/// T(A)(x) = int_0^1 -A(sx)^2 - C(sx)A(sx) - C(sx) ds, node-wise composite
/// Gauss-Legendre in s, A read through multilinear interpolation.
GridFunction apply_T(const GridFunction& A, const MatrixField& C,
                     int quad_points = 16, int quad_panels = 2);

struct PicardReport {
  double D = 0.0;
  double eta = 0.0;            // effective radius min(requested, 1/(10 D))
  bool eta_truncated = false;  // requested radius exceeded 1/(10 D)
  int iterations = 0;
  std::vector<double> successive_distances;
  double fixed_point_residual = 0.0;
  double sup_A = 0.0;          // max node ||A||
  double weighted_sup_A = 0.0; // max node ||A|| / |x|
  bool bounds_ok = false;      // |A| <= (5/8) D |x| and |A| <= 1/16 at nodes
};

/// Picard iteration A_0 = 0, A_{k+1} = T(A_k) on B^n(eta) with
/// eta = min(eta_requested, 1/(10 D)).  The iteration cap comes from the
/// guaranteed geometric rate 1/5, so non-convergence is an error, not a hang.
std::pair<GridFunction, PicardReport> picard_solve(const MatrixField& C, int n,
                                                   double eta_requested,
                                                   int half_res, double tol,
                                                   int quad_points = 16,
                                                   int quad_panels = 2);

/// max over random admissible pairs of d(T(A), T(B)) / d(A, B).
double contraction_diagnostic(const MatrixField& C, int n, double eta,
                              int half_res, int trials, std::uint64_t seed,
                              int quad_points = 16, int quad_panels = 2);

/// max over rays theta and radii r of |d/dr (r A(r theta)) + A^2 + CA + C|,
/// d/dr by central differences along the ray.
double ode_residual(const GridFunction& A, const MatrixField& C,
                    int theta_samples = 16, int r_steps = 24);

}  // namespace ccharts

#endif  // CCHARTS_ODECORE_HPP
