#include "ccharts/fields.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ccharts {

bool Box::contains(const Vec& x, double slack) const {
  for (int i = 0; i < dim(); ++i)
    if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
  return true;
}

Box Box::cube(int n, double half_width) {
  Box b;
  b.lo = Vec::Constant(n, -half_width);
  b.hi = Vec::Constant(n, half_width);
  return b;
}

Box Box::centered(const Vec& c, const Vec& half_widths) {
  Box b;
  b.lo = c - half_widths;
  b.hi = c + half_widths;
  return b;
}

VectorField VectorField::from_exprs(std::vector<Expr> coeffs, std::string name) {
  VectorField f;
  f.n_ = static_cast<int>(coeffs.size());
  f.name_ = std::move(name);
  f.expr_backed_ = true;
  f.jac_exprs_.resize(coeffs.size());
  for (int i = 0; i < f.n_; ++i) {
    f.jac_exprs_[i].reserve(f.n_);
    for (int k = 1; k <= f.n_; ++k)
      f.jac_exprs_[i].push_back(coeffs[i].differentiate(k));
  }
  f.coeff_exprs_ = std::move(coeffs);
  return f;
}

VectorField VectorField::from_strings(const std::vector<std::string>& coeffs,
                                      int n, std::string name) {
  if (static_cast<int>(coeffs.size()) != n)
    throw Error("field '" + name + "': coefficient count != dimension");
  std::vector<Expr> es;
  es.reserve(coeffs.size());
  for (const auto& s : coeffs) es.push_back(Expr::parse(s, n));
  return from_exprs(std::move(es), std::move(name));
}

VectorField VectorField::native(int n, EvalFn f, JacFn jac, std::string name) {
  VectorField v;
  v.n_ = n;
  v.eval_ = std::move(f);
  v.jac_ = std::move(jac);
  v.name_ = std::move(name);
  return v;
}

VectorField VectorField::constant(const Vec& v, std::string name) {
  int n = static_cast<int>(v.size());
  return native(
      n, [v](const Vec&) { return v; },
      [n](const Vec&) { return Mat::Zero(n, n); }, std::move(name));
}

Vec VectorField::operator()(const Vec& x) const {
  if (expr_backed_) {
    Vec out(n_);
    std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    for (int i = 0; i < n_; ++i) out[i] = coeff_exprs_[i].eval(xs);
    return out;
  }
  return eval_(x);
}

Mat VectorField::jacobian(const Vec& x, double h_fd) const {
  if (expr_backed_) {
    Mat J(n_, n_);
    std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    for (int i = 0; i < n_; ++i)
      for (int k = 0; k < n_; ++k) J(i, k) = jac_exprs_[i][k].eval(xs);
    return J;
  }
  if (jac_) return jac_(x);
  Mat J(n_, n_);
  for (int k = 0; k < n_; ++k) {
    double h = h_fd * std::max(1.0, std::abs(x[k]));
    Vec xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    J.col(k) = ((*this)(xp) - (*this)(xm)) / (2 * h);
  }
  return J;
}

VectorField VectorField::scaled(double c, std::string name) const {
  if (name.empty()) name = name_;
  if (expr_backed_) {
    std::vector<Expr> es;
    es.reserve(coeff_exprs_.size());
    for (const auto& e : coeff_exprs_) es.push_back(Expr::scaled(e, c));
    return from_exprs(std::move(es), std::move(name));
  }
  auto base_eval = eval_;
  auto base_jac = jac_;
  JacFn jac;
  if (base_jac)
    jac = [base_jac, c](const Vec& x) { return Mat(c * base_jac(x)); };
  return native(
      n_, [base_eval, c](const Vec& x) { return Vec(c * base_eval(x)); },
      std::move(jac), std::move(name));
}

VectorSystem::VectorSystem(std::vector<VectorField> fields, Box domain)
    : fields_(std::move(fields)), domain_(std::move(domain)) {
  if (fields_.empty()) throw Error("system needs at least one field");
  n_ = fields_[0].dim();
  for (const auto& f : fields_)
    if (f.dim() != n_) throw Error("fields disagree on dimension");
  if (domain_.dim() != n_) throw Error("domain dimension mismatch");
}

Mat VectorSystem::frame(const Vec& x) const {
  Mat M(n_, num_fields());
  for (int j = 0; j < num_fields(); ++j) M.col(j) = fields_[j](x);
  return M;
}

VectorSystem VectorSystem::subsystem(const IndexTuple& J) const {
  std::vector<VectorField> fs;
  fs.reserve(J.size());
  for (int j : J) fs.push_back(field(j));
  return VectorSystem(std::move(fs), domain_);
}

void VectorSystem::set_structure_exprs(
    std::vector<std::vector<std::vector<Expr>>> c, double tol, int samples) {
  const int q = num_fields();
  if (static_cast<int>(c.size()) != q)
    throw Error("structure coefficients: wrong outer size");
  // Validate the residual ||[X_j,X_k] - sum_l c X_l|| on sampled points.
  std::mt19937_64 rng(1234);
  for (int s = 0; s < samples; ++s) {
    Vec x(n_);
    for (int i = 0; i < n_; ++i) {
      std::uniform_real_distribution<double> u(domain_.lo[i], domain_.hi[i]);
      x[i] = u(rng);
    }
    std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    Mat M = frame(x);
    for (int j = 0; j < q; ++j)
      for (int k = 0; k < q; ++k) {
        Vec lhs = commutator(fields_[j], fields_[k], x);
        Vec rhs = Vec::Zero(n_);
        for (int l = 0; l < q; ++l) rhs += c[j][k][l].eval(xs) * M.col(l);
        double scale = std::max(1.0, lhs.norm());
        if ((lhs - rhs).norm() > tol * scale)
          throw Error("structure coefficients disagree with commutators at a "
                      "sampled point (residual " +
                      std::to_string((lhs - rhs).norm()) + ")");
      }
  }
  structure_exprs_ = std::move(c);
}

Vec commutator(const VectorField& a, const VectorField& b, const Vec& x,
               double h_fd) {
  if (a.dim() != b.dim()) throw Error("commutator: dimension mismatch");
  return b.jacobian(x, h_fd) * a(x) - a.jacobian(x, h_fd) * b(x);
}

bool spans(const Mat& columns) {
  const int n = static_cast<int>(columns.rows());
  double colmax = 0.0;
  for (int j = 0; j < columns.cols(); ++j)
    colmax = std::max(colmax, columns.col(j).norm());
  if (colmax == 0.0) return false;
  double best = 0.0;
  if (columns.cols() == n) {
    best = std::abs(columns.determinant());
  } else {
    // largest n x n minor via column-pivoted QR is enough for a rank check
    Eigen::ColPivHouseholderQR<Mat> qr(columns);
    best = std::abs(qr.matrixR().topLeftCorner(n, n).diagonal().prod());
  }
  return best >= 1e-10 * std::pow(colmax, n);
}

std::vector<std::vector<std::vector<double>>> structure_coefficients(
    const VectorSystem& S, const Vec& x) {
  const int q = S.num_fields();
  std::vector<std::vector<std::vector<double>>> c(
      q, std::vector<std::vector<double>>(q, std::vector<double>(q, 0.0)));
  if (S.has_structure_exprs()) {
    std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    const auto& ce = S.structure_exprs();
    for (int j = 0; j < q; ++j)
      for (int k = 0; k < q; ++k)
        for (int l = 0; l < q; ++l) c[j][k][l] = ce[j][k][l].eval(xs);
    return c;
  }
  Mat M = S.frame(x);
  if (!spans(M)) throw SpanError("fields do not span at the requested point");
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(M);
  for (int j = 0; j < q; ++j)
    for (int k = j + 1; k < q; ++k) {
      Vec br = commutator(S.field(j + 1), S.field(k + 1), x);
      Vec sol = cod.solve(br);  // minimum-norm solution
      for (int l = 0; l < q; ++l) {
        c[j][k][l] = sol[l];
        c[k][j][l] = -sol[l];
      }
    }
  return c;
}

double wedge_det(const VectorSystem& S, const IndexTuple& J, const Vec& x) {
  const int n = S.dim();
  if (static_cast<int>(J.size()) != n)
    throw Error("wedge_det: tuple length must equal the dimension");
  Mat M(n, n);
  for (int i = 0; i < n; ++i) M.col(i) = S.field(J[i])(x);
  return M.determinant();
}

namespace {
void sorted_tuples(int n, int q, int start, IndexTuple& cur,
                   const std::function<void(const IndexTuple&)>& emit) {
  if (static_cast<int>(cur.size()) == n) {
    emit(cur);
    return;
  }
  for (int j = start; j <= q; ++j) {
    cur.push_back(j);
    sorted_tuples(n, q, j + 1, cur, emit);
    cur.pop_back();
  }
}
}  // namespace

J0Selection select_J0(const VectorSystem& S, const Vec& x0, double zeta) {
  if (zeta <= 0.0 || zeta > 1.0) throw Error("zeta must lie in (0,1]");
  const int n = S.dim();
  const int q = S.num_fields();
  if (q < n) throw SpanError("fewer fields than dimensions");
  double best = -1.0;
  double best_det = 0.0;
  IndexTuple best_J;
  IndexTuple cur;
  // Over sorted tuples: every tuple with a repeat has det 0 and permutations
  // only flip sign, so the max of |det| over I(n,q) is attained here.
  sorted_tuples(n, q, 1, cur, [&](const IndexTuple& J) {
    double d = std::abs(wedge_det(S, J, x0));
    if (d > best + 1e-15 * std::max(1.0, best)) {
      best = d;
      best_J = J;  // first visit in lexicographic order wins ties
      best_det = d;
    }
  });
  Mat M = S.frame(x0);
  double colmax = 0.0;
  for (int j = 0; j < q; ++j) colmax = std::max(colmax, M.col(j).norm());
  if (best <= 1e-10 * std::pow(std::max(colmax, 1e-300), n))
    throw SpanError("all wedge determinants vanish at the base point");
  double ratio = best / best_det;  // == 1 for the maximizer choice
  if (ratio > 1.0 / zeta)
    throw Error("J0 selection violates the zeta condition");
  return {best_J, ratio, best_det};
}

Vec cramer_coeffs(const Mat& basis_columns, const Vec& y_value) {
  const int n = static_cast<int>(basis_columns.rows());
  double den = basis_columns.determinant();
  double colmax = 0.0;
  for (int j = 0; j < n; ++j)
    colmax = std::max(colmax, basis_columns.col(j).norm());
  if (std::abs(den) < 1e-10 * std::pow(std::max(colmax, 1e-300), n))
    throw SpanError("singular basis in Cramer coefficients");
  Vec b(n);
  for (int l = 0; l < n; ++l) {
    Mat Ml = basis_columns;
    Ml.col(l) = y_value;
    b[l] = Ml.determinant() / den;
  }
  return b;
}

Vec cramer_coeffs(const std::vector<VectorField>& basis, const VectorField& y,
                  const Vec& x) {
  const int n = static_cast<int>(basis.size());
  Mat M(n, n);
  for (int l = 0; l < n; ++l) M.col(l) = basis[l](x);
  return cramer_coeffs(M, y(x));
}

}  // namespace ccharts
