#ifndef CCHARTS_FIELDS_HPP
#define CCHARTS_FIELDS_HPP

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ccharts/expr.hpp"

namespace ccharts {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Axis-aligned box domain; per-axis closed intervals.
struct Box {
  Vec lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& x, double slack = 0.0) const;
  double diameter() const { return (hi - lo).norm(); }
  static Box cube(int n, double half_width);
  static Box centered(const Vec& c, const Vec& half_widths);
};

struct SpanError : Error {
  using Error::Error;
};

/// One C^1 vector field on R^n.  Either Expr-backed (exact Jacobian via
/// symbolic differentiation) or native (callables, optional exact Jacobian).
class VectorField {
 public:
  using EvalFn = std::function<Vec(const Vec&)>;
  using JacFn = std::function<Mat(const Vec&)>;

  VectorField() = default;
  static VectorField from_exprs(std::vector<Expr> coeffs, std::string name = "");
  static VectorField from_strings(const std::vector<std::string>& coeffs, int n,
                                  std::string name = "");
  static VectorField native(int n, EvalFn f, JacFn jac = nullptr,
                            std::string name = "");
  static VectorField constant(const Vec& v, std::string name = "");

  int dim() const { return n_; }
  const std::string& name() const { return name_; }
  bool has_exact_jacobian() const { return expr_backed_ || jac_ != nullptr; }
  bool expr_backed() const { return expr_backed_; }
  const std::vector<Expr>& exprs() const { return coeff_exprs_; }

  Vec operator()(const Vec& x) const;
  /// Exact Jacobian when available, else central differences with
  /// h = h_fd * max(1, |x_k|) per axis.
  Mat jacobian(const Vec& x, double h_fd = 1e-5) const;

  VectorField scaled(double c, std::string name = "") const;

 private:
  int n_ = 0;
  std::string name_;
  bool expr_backed_ = false;
  std::vector<Expr> coeff_exprs_;
  std::vector<std::vector<Expr>> jac_exprs_;  // [row i][col k] = d coeff_i / d x_k
  EvalFn eval_;
  JacFn jac_;
};

/// Ordered tuple J = (j1..jn) of field indices (1-based, matching the config).
using IndexTuple = std::vector<int>;

/// q vector fields of common dimension on a box domain.
class VectorSystem {
 public:
  VectorSystem() = default;
  VectorSystem(std::vector<VectorField> fields, Box domain);

  int dim() const { return n_; }
  int num_fields() const { return static_cast<int>(fields_.size()); }
  const VectorField& field(int j_1based) const { return fields_.at(j_1based - 1); }
  const std::vector<VectorField>& fields() const { return fields_; }
  const Box& domain() const { return domain_; }

  /// Optional user-supplied structure coefficients c[j][k][l] (all 0-based
  /// here), validated against commutators on sampled points at load.
  void set_structure_exprs(std::vector<std::vector<std::vector<Expr>>> c,
                           double tol = 1e-6, int samples = 20);
  bool has_structure_exprs() const { return !structure_exprs_.empty(); }

  /// n x q matrix whose columns are X_1(x) .. X_q(x).
  Mat frame(const Vec& x) const;
  /// Restriction to the fields named by J (1-based); shares the domain.
  VectorSystem subsystem(const IndexTuple& J) const;

  const std::vector<std::vector<std::vector<Expr>>>& structure_exprs() const {
    return structure_exprs_;
  }

 private:
  int n_ = 0;
  std::vector<VectorField> fields_;
  Box domain_;
  std::vector<std::vector<std::vector<Expr>>> structure_exprs_;
};

Vec commutator(const VectorField& a, const VectorField& b, const Vec& x,
               double h_fd = 1e-5);

/// Minimum-Euclidean-norm tensor c[j][k][l] with [X_j,X_k](x) = sum_l c X_l(x).
/// Returns the user-supplied coefficients evaluated at x when present.
/// Throws SpanError when the fields do not span R^n at x.
std::vector<std::vector<std::vector<double>>> structure_coefficients(
    const VectorSystem& S, const Vec& x);

double wedge_det(const VectorSystem& S, const IndexTuple& J, const Vec& x);

struct J0Selection {
  IndexTuple J0;          // sorted, 1-based
  double ratio;           // max_J |det_J| / |det_J0|, always >= 1
  double det_value;       // det at the base point for J0
};

/// Lexicographically smallest maximizer of |wedge_det| over sorted tuples;
/// checks the zeta condition ratio <= 1/zeta.
J0Selection select_J0(const VectorSystem& S, const Vec& x0, double zeta);

/// Coefficients b with y(x) = sum_l b_l basis_l(x) via determinant quotients.
Vec cramer_coeffs(const std::vector<VectorField>& basis, const VectorField& y,
                  const Vec& x);
Vec cramer_coeffs(const Mat& basis_columns, const Vec& y_value);

/// Scale-aware rank check: |det| >= 1e-10 * (max column norm)^n.
bool spans(const Mat& columns);

}  // namespace ccharts

#endif  // CCHARTS_FIELDS_HPP
