#include "ccharts/grid.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace ccharts {

double operator_norm(const Mat& A) {
  if (A.rows() == 1 && A.cols() == 1) return std::abs(A(0, 0));
  return A.jacobiSvd().singularValues()[0];
}

GridFunction::GridFunction(int n, double eta, int m, int rows, int cols)
    : n_(n), m_(m), rows_(rows), cols_(cols), eta_(eta) {
  if (n < 1 || m < 1 || eta <= 0) throw Error("bad grid parameters");
  strides_.assign(n_, 1);
  for (int d = 1; d < n_; ++d) strides_[d] = strides_[d - 1] * side();
  int total = strides_[n_ - 1] * side();
  values_.assign(total, Mat::Zero(rows, cols));
  in_ball_.assign(total, false);
  const double r2 = eta_ * eta_ * (1.0 + 1e-12);
  for (int flat = 0; flat < total; ++flat)
    in_ball_[flat] = node_point(flat).squaredNorm() <= r2;
}

Vec GridFunction::node_point(int flat) const {
  Vec x(n_);
  for (int d = 0; d < n_; ++d) {
    int idx = (flat / strides_[d]) % side();
    x[d] = eta_ * (idx - m_) / m_;
  }
  return x;
}

GridFunction GridFunction::sample(int n, double eta, int m,
                                  const std::function<Mat(const Vec&)>& f) {
  Mat probe = f(Vec::Zero(n));
  GridFunction g(n, eta, m, static_cast<int>(probe.rows()),
                 static_cast<int>(probe.cols()));
  for (int flat = 0; flat < g.node_count(); ++flat)
    g.values_[flat] = f(g.node_point(flat));
  return g;
}

Mat GridFunction::operator()(const Vec& x) const {
  // cell lookup in index space; clamp kills 1-ulp boundary trouble
  std::vector<int> base(n_);
  std::vector<double> frac(n_);
  for (int d = 0; d < n_; ++d) {
    double u = x[d] / eta_ * m_ + m_;  // in [0, 2m]
    if (u < -1e-9 || u > 2 * m_ + 1e-9)
      throw Error("interpolation point outside the grid cube");
    u = std::clamp(u, 0.0, static_cast<double>(2 * m_));
    int i = std::min(static_cast<int>(u), 2 * m_ - 1);
    base[d] = i;
    frac[d] = u - i;
  }
  Mat out = Mat::Zero(rows_, cols_);
  const int corners = 1 << n_;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    int flat = 0;
    for (int d = 0; d < n_; ++d) {
      int bit = (c >> d) & 1;
      w *= bit ? frac[d] : 1.0 - frac[d];
      flat += (base[d] + bit) * strides_[d];
    }
    if (w != 0.0) out += w * values_[flat];
  }
  return out;
}

double GridFunction::weighted_sup() const {
  double best = 0.0;
  for (int flat = 0; flat < node_count(); ++flat) {
    if (!in_ball_[flat]) continue;
    double r = node_point(flat).norm();
    if (r == 0.0) continue;
    best = std::max(best, operator_norm(values_[flat]) / r);
  }
  return best;
}

double GridFunction::sup_norm() const {
  double best = 0.0;
  for (int flat = 0; flat < node_count(); ++flat)
    if (in_ball_[flat]) best = std::max(best, operator_norm(values_[flat]));
  return best;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
  if (other.node_count() != node_count() || other.n_ != n_ || other.m_ != m_ ||
      other.eta_ != eta_)
    throw Error("grid mismatch");
  for (int flat = 0; flat < node_count(); ++flat) values_[flat] -= other.values_[flat];
  return *this;
}

double weighted_distance(const GridFunction& A, const GridFunction& B) {
  if (A.dim() != B.dim() || A.half_res() != B.half_res() ||
      A.radius() != B.radius())
    throw Error("grid mismatch");
  double best = 0.0;
  for (int flat = 0; flat < A.node_count(); ++flat) {
    if (!A.node_in_ball(flat)) continue;
    double r = A.node_point(flat).norm();
    if (r == 0.0) continue;
    best = std::max(best, operator_norm(A.at_index(flat) - B.at_index(flat)) / r);
  }
  return best;
}

void GridFunction::write_csv(std::ostream& os) const {
  os << "n,eta,m,rows,cols\n"
     << n_ << ',' << eta_ << ',' << m_ << ',' << rows_ << ',' << cols_ << '\n';
  os.precision(17);
  for (int flat = 0; flat < node_count(); ++flat) {
    os << flat;
    const Mat& v = values_[flat];
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) os << ',' << v(i, j);
    os << '\n';
  }
}

GridFunction GridFunction::read_csv(std::istream& is) {
  std::string header, line;
  std::getline(is, header);
  std::getline(is, line);
  std::istringstream hs(line);
  int n, m, rows, cols;
  double eta;
  char comma;
  hs >> n >> comma >> eta >> comma >> m >> comma >> rows >> comma >> cols;
  if (!hs) throw Error("bad grid csv header");
  GridFunction g(n, eta, m, rows, cols);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int flat;
    ls >> flat;
    Mat v(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) {
        ls >> comma >> v(i, j);
      }
    if (!ls || flat < 0 || flat >= g.node_count()) throw Error("bad grid csv row");
    g.values_[flat] = v;
  }
  return g;
}

}  // namespace ccharts
