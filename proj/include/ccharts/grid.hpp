#ifndef CCHARTS_GRID_HPP
#define CCHARTS_GRID_HPP

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <vector>

#include "ccharts/fields.hpp"

namespace ccharts {

/// Matrix-valued samples on the Cartesian grid of the cube [-eta, eta]^n with
/// multilinear interpolation.  Node coordinates are eta * i / m for
/// i in {-m..m}, so the origin is always a node.  Nodes with |x| > eta are
/// flagged as outside the ball B^n(eta): they still carry values (so that
/// interpolation near the sphere has full cell support) but are excluded
/// from every norm and diagnostic.
class GridFunction {
 public:
  GridFunction() = default;
  /// m = per-axis half resolution; rows/cols = matrix value shape.
  GridFunction(int n, double eta, int m, int rows, int cols);

  static GridFunction zeros(int n, double eta, int m, int dim) {
    return GridFunction(n, eta, m, dim, dim);
  }
  /// Sample an evaluatable matrix field at every node.
  static GridFunction sample(int n, double eta, int m,
                             const std::function<Mat(const Vec&)>& f);

  int dim() const { return n_; }
  double radius() const { return eta_; }
  int half_res() const { return m_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int node_count() const { return static_cast<int>(values_.size()); }

  const Mat& at_index(int flat) const { return values_[flat]; }
  Mat& at_index(int flat) { return values_[flat]; }
  Vec node_point(int flat) const;
  bool node_in_ball(int flat) const { return in_ball_[flat]; }

  /// Multilinear interpolation; exact at nodes.  |x| must be <= eta.
  Mat operator()(const Vec& x) const;

  /// max over in-ball nodes x != 0 of ||A(x)||_op / |x|   (the metric of
  /// the weighted space; see weighted_distance for the two-argument form).
  double weighted_sup() const;
  /// max over in-ball nodes of ||A(x)||_op.
  double sup_norm() const;

  GridFunction& operator-=(const GridFunction& other);

  void write_csv(std::ostream& os) const;
  static GridFunction read_csv(std::istream& is);

 private:
  int n_ = 0, m_ = 0, rows_ = 0, cols_ = 0;
  double eta_ = 0.0;
  std::vector<Mat> values_;
  std::vector<bool> in_ball_;
  std::vector<int> strides_;

  int side() const { return 2 * m_ + 1; }
};

double operator_norm(const Mat& A);

/// sup over in-ball nonzero nodes of ||A(x) - B(x)||_op / |x|.
double weighted_distance(const GridFunction& A, const GridFunction& B);

}  // namespace ccharts

#endif  // CCHARTS_GRID_HPP
