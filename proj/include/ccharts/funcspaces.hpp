#ifndef CCHARTS_FUNCSPACES_HPP
#define CCHARTS_FUNCSPACES_HPP

#include <functional>
#include <string>
#include <vector>

#include "ccharts/ccmetric.hpp"
#include "ccharts/grid.hpp"

namespace ccharts {

/// Scalar function with optional exact partial derivatives.
struct ScalarFunction {
  int n = 0;
  std::function<double(const Vec&)> f;
  bool expr_backed = false;
  Expr expr;  // when expr_backed

  static ScalarFunction from_expr(Expr e, int n);
  static ScalarFunction from_string(const std::string& text, int n);
  static ScalarFunction native(int n, std::function<double(const Vec&)> f);
  double operator()(const Vec& x) const { return f(x); }
  /// partial derivative function (exact when Expr-backed, else central FD)
  ScalarFunction derivative(int var_1based) const;
};

/// Sampling domain: a ball B^n(center, radius) or a box.
struct NormDomain {
  Vec center;
  double radius = 0;  // > 0: ball; otherwise use box
  Box box;
  bool is_ball() const { return radius > 0; }
  bool contains(const Vec& x) const;
  static NormDomain ball(const Vec& c, double r);
  static NormDomain of_box(const Box& b);
};

struct NormGrid {
  int points_per_axis = 33;   // tensor grid for x
  int dyadic_levels = 10;     // h ladder: largest_h * 2^{-k}
  int extra_directions = 8;   // non-axis h directions (n >= 2)
};

/// Sup-estimator report.  Estimates are lower bounds of the true norms:
/// sups over structured finite families, monotone under refinement.
struct NormReport {
  std::string family;   // "Cm" | "Holder" | "Zygmund" | "CmX" | "HolderX" |
                        // "ZygmundX" | "Cml"
  int m = 0;
  int l = 0;
  double s = 0;         // Holder/Zygmund exponent or omega exponent
  double value = 0;
  double c0_part = 0;      // plain sup part
  double seminorm_part = 0;  // difference-quotient part (top order)
  int samples_used = 0;
  int samples_skipped = 0;  // domain errors / paths exiting the domain
  std::string subfamily;    // e.g. "constant-controls" for adapted Zygmund
  std::string to_json() const;
};

/// Classical Holder norm sum_{|a|<=m} (sup + difference seminorm).
/// s = 0 drops the seminorm and reports the plain C^m norm.
NormReport holder_norm(const ScalarFunction& f, const NormDomain& dom, int m,
                       double s, const NormGrid& grid = {});

/// Zygmund norm: H^{0, s/2} part plus second-difference part for s in (0,1];
/// s > 1 recurses through derivatives.
NormReport zygmund_norm(const ScalarFunction& f, const NormDomain& dom, double s,
                        const NormGrid& grid = {});

struct AdaptedParams {
  CCGraphParams cc;
  int base_points = 6;       // flood centers for the rho-pair family
  double flow_h = 1e-3;      // step for directional flow-derivatives
};

/// Adapted Holder norm: X^alpha f through flow derivatives, rho through the
/// cc estimator.
NormReport adapted_holder_norm(const ScalarFunction& f, const VectorSystem& S,
                               const NormDomain& dom, int m, double s,
                               const NormGrid& grid = {},
                               const AdaptedParams& params = {});

/// Adapted Zygmund norm over the constant-control path subfamily.
NormReport adapted_zygmund_norm(const ScalarFunction& f, const VectorSystem& S,
                                const NormDomain& dom, double s,
                                const NormGrid& grid = {},
                                const AdaptedParams& params = {});

/// C^{m,l,omega} difference norm with omega(h) = h^omega_exponent:
///   sum_{|b|<=m} sum_{j<=l} sup omega(|h|)^{-j} |Delta_h^j d^b F|.
NormReport cml_norm(const ScalarFunction& f, int m, int l, double omega_exponent,
                    const NormDomain& dom, const NormGrid& grid = {});
/// Same for a grid-sampled matrix field (derivatives by grid differences).
NormReport cml_norm(const GridFunction& F, int m, int l, double omega_exponent,
                    const NormGrid& grid = {});

struct InclusionCheck {
  std::string name;
  double lhs = 0, rhs = 0, constant = 0;
  bool holds() const { return lhs <= constant * rhs + 1e-12; }
};

/// The four estimator inequalities with the explicit constants 3, 1, 5, 15,
/// evaluated on one shared sample family.
std::vector<InclusionCheck> inclusion_check(const ScalarFunction& f,
                                            const NormDomain& dom, double s1,
                                            double s2, const NormGrid& grid = {});

}  // namespace ccharts

#endif  // CCHARTS_FUNCSPACES_HPP
