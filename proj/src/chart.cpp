#include "ccharts/chart.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ccharts {

FlowOptions Chart::flow_options() const {
  FlowOptions o;
  o.steps_per_unit_time = cfg_.rk4_steps;
  o.box = system_->domain();
  return o;
}

Vec Chart::phi(const Vec& t) const {
  return exp_multi(basis_, t, x0_, flow_options());
}

Mat Chart::dphi(const Vec& t) const {
  const int n = static_cast<int>(x0_.size());
  Vec y = phi(t);
  Mat X(n, n);
  for (int p = 0; p < n; ++p) X.col(p) = basis_[p](y);
  Mat IA = Mat::Identity(n, n) + A_(t);
  return X * IA.transpose().inverse();
}

Vec Chart::Y(int j, const Vec& t) const {
  const int n = static_cast<int>(x0_.size());
  Mat IA = Mat::Identity(n, n) + A_(t);
  int pos = position_of_[j];
  if (pos >= 0) return IA.row(pos).transpose();
  Vec b = dependent_coeffs(j, t);
  Vec out = Vec::Zero(n);
  for (int l = 0; l < n; ++l) out += b[l] * IA.row(l).transpose();
  return out;
}

Vec Chart::dependent_coeffs(int k, const Vec& t) const {
  const int n = static_cast<int>(x0_.size());
  if (position_of_[k] >= 0) {
    Vec b = Vec::Zero(n);
    b[position_of_[k]] = 1.0;
    return b;
  }
  Vec y = phi(t);
  Mat X(n, n);
  for (int p = 0; p < n; ++p) X.col(p) = basis_[p](y);
  return cramer_coeffs(X, system_->field(k)(y));
}

std::vector<std::vector<std::vector<double>>> Chart::basis_structure(
    const Vec& y) const {
  const int n = static_cast<int>(x0_.size());
  Mat X(n, n);
  for (int p = 0; p < n; ++p) X.col(p) = basis_[p](y);
  Eigen::PartialPivLU<Mat> lu(X);
  double colmax = 0;
  for (int p = 0; p < n; ++p) colmax = std::max(colmax, X.col(p).norm());
  if (std::abs(X.determinant()) < 1e-10 * std::pow(std::max(colmax, 1e-300), n))
    throw SpanError("basis degenerate along the chart image");
  std::vector<std::vector<std::vector<double>>> c(
      n, std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)));
  for (int j = 0; j < n; ++j)
    for (int l = j + 1; l < n; ++l) {
      Vec br = commutator(basis_[j], basis_[l], y);
      Vec sol = lu.solve(br);
      for (int k = 0; k < n; ++k) {
        c[j][l][k] = sol[k];
        c[l][j][k] = -sol[k];
      }
    }
  return c;
}

std::vector<std::vector<std::vector<double>>> Chart::pullback_structure(
    const Vec& t) const {
  return basis_structure(phi(t));
}

Vec Chart::inverse(const Vec& y, const Vec* t_guess) const {
  const int n = static_cast<int>(x0_.size());
  Vec t = t_guess ? *t_guess : Vec::Zero(n);
  const double scale = std::max(1.0, y.norm());
  for (int iter = 0; iter < 50; ++iter) {
    Vec r = y - phi(t);
    if (r.norm() <= 1e-9 * scale) return t;
    Vec step = dphi(t).partialPivLu().solve(r);
    t += step;
    double tn = t.norm();
    if (tn > radii_.eta1) t *= (radii_.eta1 * (1 - 1e-9)) / tn;
  }
  Vec r = y - phi(t);
  if (r.norm() <= 1e-8 * scale) return t;
  throw Error("chart inverse did not converge (point outside the image?)");
}

bool Chart::in_image(const Vec& y) const {
  try {
    Vec t = inverse(y);
    return t.norm() < radii_.eta1;
  } catch (const Error&) {
    return false;
  }
}

Vec pullback_direct(const std::function<Vec(const Vec&)>& phi, const VectorField& Xj,
                    const Vec& t, double h_fd) {
  const int n = static_cast<int>(t.size());
  Mat dphi(n, n);
  for (int d = 0; d < n; ++d) {
    Vec tp = t, tm = t;
    tp[d] += h_fd;
    tm[d] -= h_fd;
    dphi.col(d) = (phi(tp) - phi(tm)) / (2 * h_fd);
  }
  double colmax = 0;
  for (int d = 0; d < n; ++d) colmax = std::max(colmax, dphi.col(d).norm());
  if (std::abs(dphi.determinant()) < 1e-12 * std::pow(std::max(colmax, 1e-300), n))
    throw SpanError("pullback_direct: singular dPhi");
  return dphi.partialPivLu().solve(Xj(phi(t)));
}

IFTResult ift_kappa(const std::function<Mat(const Vec&)>& Ymatrix, int n,
                    double eta, int res) {
  IFTResult out;
  GridFunction M = GridFunction::sample(n, eta, res, Ymatrix);
  out.c0 = std::numeric_limits<double>::infinity();
  for (int flat = 0; flat < M.node_count(); ++flat) {
    if (!M.node_in_ball(flat)) continue;
    const Mat& m = M.at_index(flat);
    out.c0 = std::min(out.c0, std::abs(m.determinant()));
    out.C0 = std::max(out.C0, operator_norm(m));
    out.sup_inv = std::max(out.sup_inv, operator_norm(m.inverse()));
  }
  if (!(out.c0 > 0) || !std::isfinite(out.sup_inv))
    throw SpanError("ift_kappa: frame degenerates on the ball");
  out.kappa = 0.5 / out.sup_inv;
  // Lipschitz constant of t -> M(t) over adjacent nodes
  double h = eta / res;
  for (int flat = 0; flat < M.node_count(); ++flat) {
    if (!M.node_in_ball(flat)) continue;
    Vec t = M.node_point(flat);
    for (int d = 0; d < n; ++d) {
      Vec tp = t;
      tp[d] += h;
      if (tp.norm() > eta) continue;
      out.lipschitz =
          std::max(out.lipschitz, operator_norm(Ymatrix(tp) - M.at_index(flat)) / h);
    }
  }
  // smallness: ||M(0)^{-1}|| L |v| <= 1/2 inside B(Delta0)
  out.Delta0 = out.lipschitz > 0
                   ? std::min(eta, 0.5 / (out.lipschitz * out.sup_inv))
                   : eta;
  return out;
}

namespace {

double derive_eta_cap(const VectorSystem& S, const Vec& x0) {
  // generous upper bound for the condition-C bisection: box reach over the
  // smallest field speed that could traverse it
  double reach = (S.domain().hi - S.domain().lo).maxCoeff();
  Mat M = S.frame(x0);
  double speed = 0;
  for (int j = 0; j < M.cols(); ++j) speed = std::max(speed, M.col(j).norm());
  return reach / std::max(speed, 1e-6) * 2.0;
}

}  // namespace

std::pair<Chart, ChartDiagnostics> build_chart(const VectorSystem& S, const Vec& x0,
                                               const ChartConfig& cfg) {
  const int n = S.dim();
  const int q = S.num_fields();
  if (!S.domain().contains(x0)) throw Error("base point outside the domain");

  Chart chart;
  ChartDiagnostics diag;
  chart.system_ = std::make_shared<VectorSystem>(S);
  chart.x0_ = x0;
  chart.zeta_ = cfg.zeta;
  chart.cfg_ = cfg;

  // --- J0 -------------------------------------------------------------
  if (cfg.forced_J0) {
    chart.J0_ = *cfg.forced_J0;
    if (static_cast<int>(chart.J0_.size()) != n)
      throw Error("forced J0 has the wrong length");
  } else {
    chart.J0_ = select_J0(S, x0, cfg.zeta).J0;
  }
  chart.position_of_.assign(q + 1, -1);
  for (int p = 0; p < n; ++p) {
    chart.basis_.push_back(chart.system_->field(chart.J0_[p]));
    chart.position_of_[chart.J0_[p]] = p;
  }
  {
    Mat X0(n, n);
    for (int p = 0; p < n; ++p) X0.col(p) = chart.basis_[p](x0);
    if (!spans(X0)) throw SpanError("J0 fields do not span at the base point");
  }

  FlowOptions fopts = chart.flow_options();

  // --- eta: bisection over the condition-C probe ----------------------
  double eta_hi = cfg.eta_max > 0 ? cfg.eta_max : derive_eta_cap(S, x0);
  double eta = 0;
  if (check_condition_C(chart.basis_, x0, eta_hi, fopts, cfg.condition_c_dirs).holds) {
    eta = eta_hi;
  } else {
    double lo = 0, hi = eta_hi;
    for (int it = 0; it < cfg.eta_bisect_iters; ++it) {
      double mid = 0.5 * (lo + hi);
      if (check_condition_C(chart.basis_, x0, mid, fopts, cfg.condition_c_dirs).holds)
        lo = mid;
      else
        hi = mid;
    }
    eta = lo;
  }
  if (eta <= 0)
    throw Error("condition C fails at every probed radius");
  chart.radii_.eta = eta;
  chart.radii_.eta0 = eta;  // the domain box is already part of the probe

  // --- C(t) matrix, cached on the grid ---------------------------------
  auto raw_C = [&chart, n, eta](const Vec& t) {
    Vec teval = t;
    double tn = t.norm();
    if (tn > eta * (1 - 1e-9))  // clamp support nodes outside the ball
      teval = t * (eta * (1 - 1e-9) / tn);
    Vec y = chart.phi(teval);
    auto chat = chart.basis_structure(y);
    Mat C = Mat::Zero(n, n);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double acc = 0;
        for (int l = 0; l < n; ++l) acc += t[l] * chat[j][l][k];
        C(j, k) = acc;
      }
    return C;
  };
  // eta' = min(eta0, 1/(10 D)); cache C at the radius the solver will use
  double D0 = estimate_D(raw_C, n, std::min(eta, 1.0), std::max(8, cfg.grid_half_res / 2));
  double eta_prime = chart.radii_.eta0;
  if (D0 > 0) eta_prime = std::min(eta_prime, 1.0 / (10.0 * D0));
  GridFunction C_cache =
      GridFunction::sample(n, eta_prime, cfg.grid_half_res, raw_C);
  MatrixField C_interp = [&C_cache](const Vec& t) { return C_cache(t); };

  auto [A, picard] = picard_solve(C_interp, n, eta_prime, cfg.grid_half_res,
                                  cfg.picard_tol);
  chart.A_ = std::move(A);
  chart.radii_.eta_prime = picard.eta;
  diag.D = picard.D;
  diag.picard = picard;
  diag.sup_A = picard.sup_A;
  diag.A_bounds_ok = picard.bounds_ok && picard.sup_A <= 0.5 + 1e-9;

  // --- IFT radii --------------------------------------------------------
  const GridFunction& Agrid = chart.A_;
  auto Ymat = [&Agrid, n](const Vec& t) {
    Mat IA = Mat::Identity(n, n) + Agrid(t);
    return Mat(IA.transpose());
  };
  diag.ift = ift_kappa(Ymat, n, chart.radii_.eta_prime,
                       std::min(cfg.grid_half_res, 12));
  chart.radii_.kappa = diag.ift.kappa;
  chart.radii_.Delta0 = diag.ift.Delta0;

  // --- delta0 probe -----------------------------------------------------
  double delta0 = std::numeric_limits<double>::infinity();
  if (cfg.run_delta0) {
    VectorSystem basis_sys(chart.basis_, S.domain());
    Box K = mc_bounding_box(basis_sys, x0, chart.radii_.eta_prime);
    Delta0Params dp = cfg.delta0;
    if (dp.delta_max <= 0) dp.delta_max = std::max(1.0, 2 * chart.radii_.eta_prime);
    diag.delta0 = probe_delta0(basis_sys, K, dp, fopts);
    delta0 = diag.delta0.delta0;
  }
  chart.radii_.delta0 = delta0;
  chart.radii_.delta1 = std::min({chart.radii_.Delta0, delta0, 1.0});
  chart.radii_.eta1 =
      std::min(chart.radii_.kappa * chart.radii_.delta1, chart.radii_.eta_prime);

  // --- verification residuals -------------------------------------------
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto sample_t = [&](double radius) {
    Vec t(n);
    for (;;) {
      for (int d = 0; d < n; ++d) t[d] = u(rng) * radius;
      if (t.norm() <= radius) return t;
    }
  };
  const double h_fd = 1e-3 * std::max(chart.radii_.eta1, 1e-6);
  double worst_res = 0, worst_det = 0, worst_bkl = 0, worst_cross = 0;
  for (int i = 0; i < cfg.residual_samples; ++i) {
    Vec t = sample_t(0.95 * chart.radii_.eta1);
    Vec y = chart.phi(t);

    // dPhi via central differences (independent of the A-route)
    Mat dphi_fd(n, n);
    for (int d = 0; d < n; ++d) {
      Vec tp = t, tm = t;
      tp[d] += h_fd;
      tm[d] -= h_fd;
      dphi_fd.col(d) = (chart.phi(tp) - chart.phi(tm)) / (2 * h_fd);
    }
    for (int j = 1; j <= q; ++j) {
      Vec lhs = dphi_fd * chart.Y(j, t);
      Vec rhs = chart.system_->field(j)(y);
      worst_res = std::max(worst_res, (lhs - rhs).norm() / (1.0 + rhs.norm()));
    }
    // determinant identity |det dPhi| det(I+A) = |det X_J0 o Phi|
    Mat X(n, n);
    for (int p = 0; p < n; ++p) X.col(p) = chart.basis_[p](y);
    double lhs_det = std::abs(dphi_fd.determinant()) *
                     (Mat::Identity(n, n) + chart.A_(t)).determinant();
    double rhs_det = std::abs(X.determinant());
    worst_det = std::max(worst_det,
                         std::abs(lhs_det - rhs_det) / std::max(1e-300, rhs_det));

    // dependent coefficients reproduce X_k in the basis
    for (int k = 1; k <= q; ++k) {
      if (chart.position_of_[k] >= 0) continue;
      Vec b = chart.dependent_coeffs(k, t);
      Vec recon = Vec::Zero(n);
      for (int l = 0; l < n; ++l) recon += b[l] * X.col(l);
      Vec target = chart.system_->field(k)(y);
      worst_bkl = std::max(worst_bkl,
                           (recon - target).norm() / (1.0 + target.norm()));
    }
    (void)phi_fn;
  }
  diag.dphi_residual_max = worst_res;
  diag.det_identity_max_rel = worst_det;
  diag.bkl_residual_max = worst_bkl;

  // structure cross-check: FD bracket of interpolated Y vs c~ = chat o Phi
  {
    const double hb = std::max(1e-3 * chart.radii_.eta1, 1e-7);
    for (int i = 0; i < std::min(cfg.residual_samples, 20); ++i) {
      Vec t = sample_t(0.8 * chart.radii_.eta1);
      auto ct = chart.pullback_structure(t);
      for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) {
          // [Y_j, Y_k](t) by finite differences of the interpolated fields
          auto Yj = [&](const Vec& tt) { return chart.Y(chart.J0_[j], tt); };
          auto Yk = [&](const Vec& tt) { return chart.Y(chart.J0_[k], tt); };
          Mat DYj(n, n), DYk(n, n);
          for (int d = 0; d < n; ++d) {
            Vec tp = t, tm = t;
            tp[d] += hb;
            tm[d] -= hb;
            DYj.col(d) = (Yj(tp) - Yj(tm)) / (2 * hb);
            DYk.col(d) = (Yk(tp) - Yk(tm)) / (2 * hb);
          }
          Vec bracket = DYk * Yj(t) - DYj * Yk(t);
          Mat M(n, n);
          for (int l = 0; l < n; ++l) M.col(l) = chart.Y(chart.J0_[l], t);
          Vec coeffs = M.partialPivLu().solve(bracket);
          for (int l = 0; l < n; ++l)
            worst_cross = std::max(worst_cross, std::abs(coeffs[l] - ct[j][k][l]));
        }
    }
    diag.structure_crosscheck_max = worst_cross;
  }

  // injectivity certificate
  InjectivityReport inj = verify_injectivity(chart, 2000, cfg.seed + 1);
  diag.injectivity_min_ratio = inj.min_ratio;
  diag.injectivity_ok = inj.ok;

  // measured norms (diagnostics only; see NormReport for the estimators)
  diag.table["sup_A"] = diag.sup_A;
  diag.table["weighted_sup_A"] = picard.weighted_sup_A;
  diag.table["D"] = diag.D;
  diag.table["kappa"] = chart.radii_.kappa;
  diag.table["eta"] = chart.radii_.eta;
  diag.table["eta_prime"] = chart.radii_.eta_prime;
  diag.table["eta1"] = chart.radii_.eta1;
  diag.table["delta0"] = chart.radii_.delta0;
  diag.table["dphiY_residual[thm-item-consistency]"] = worst_res;
  diag.table["det_identity_rel[h0-lemma]"] = worst_det;
  diag.table["bkl_residual[dependent-fields]"] = worst_bkl;
  diag.table["structure_crosscheck[pullback-bracket]"] = worst_cross;
  diag.table["injectivity_min_ratio[diffeo]"] = inj.min_ratio;
  return {std::move(chart), std::move(diag)};
}

InjectivityReport verify_injectivity(const Chart& chart, int samples,
                                     std::uint64_t seed) {
  const int n = static_cast<int>(chart.base_point().size());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double radius = 0.98 * chart.radii().eta1;
  auto sample_t = [&]() {
    Vec t(n);
    for (;;) {
      for (int d = 0; d < n; ++d) t[d] = u(rng) * radius;
      if (t.norm() <= radius) return t;
    }
  };
  InjectivityReport rep;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  rep.ok = true;
  for (int i = 0; i < samples; ++i) {
    Vec t1 = sample_t(), t2 = sample_t();
    double dt = (t1 - t2).norm();
    if (dt < 1e-12) continue;
    double ratio = (chart.phi(t1) - chart.phi(t2)).norm() / dt;
    if (ratio < rep.min_ratio) {
      rep.min_ratio = ratio;
      rep.witness_t1 = t1;
      rep.witness_t2 = t2;
    }
    if (ratio < 1e-6) rep.ok = false;
  }
  return rep;
}

std::pair<double, double> radii_estimates(Chart& chart, const VectorSystem& S,
                                          const RadiiParams& params) {
  const Vec& x0 = chart.base_point();
  const double eta1 = chart.radii().eta1;
  VectorSystem basis_sys(std::vector<VectorField>{}, S.domain());
  {
    std::vector<VectorField> fs;
    for (int j : chart.J0()) fs.push_back(S.field(j));
    basis_sys = VectorSystem(fs, S.domain());
  }

  // distance fields from x0 for both systems
  double budget = std::max(1.0, 4 * eta1);
  Box box_b = mc_bounding_box(basis_sys, x0, budget);
  CCGraph flood_b = cc_flood(basis_sys, x0, budget, box_b, params.cc);
  Box box_f = mc_bounding_box(S, x0, budget);
  CCGraph flood_f = cc_flood(S, x0, budget, box_f, params.cc);

  // xi1: largest candidate with near-boundary points of B_J0(x0, xi1) inside
  // Phi(B^n(eta1)).
  auto boundary_points = [&](const CCGraph& flood, double xi) {
    std::vector<Vec> pts;
    for (const auto& node : flood.nodes())
      if (node.dist >= 0.85 * xi && node.dist < xi) pts.push_back(node.position);
    // thin deterministically
    std::vector<Vec> out;
    std::size_t stride = std::max<std::size_t>(
        1, pts.size() / std::max(1, params.boundary_samples));
    for (std::size_t i = 0; i < pts.size(); i += stride) out.push_back(pts[i]);
    return out;
  };

  double xi1 = 0;
  for (int k = params.xi_grid; k >= 1; --k) {
    double cand = budget * k / params.xi_grid;
    bool ok = true;
    auto pts = boundary_points(flood_b, cand);
    if (pts.empty()) continue;
    for (const Vec& y : pts)
      if (!chart.in_image(y)) {
        ok = false;
        break;
      }
    if (ok) {
      xi1 = cand;
      break;
    }
  }

  double xi2 = 0;
  if (xi1 > 0) {
    for (int k = params.xi_grid; k >= 1; --k) {
      double cand = xi1 * k / params.xi_grid;
      bool ok = true;
      auto pts = boundary_points(flood_f, cand);
      if (pts.empty()) continue;
      for (const Vec& y : pts) {
        double rho_b = flood_b.query(y);
        if (!(rho_b < xi1)) {
          ok = false;
          break;
        }
      }
      if (ok) {
        xi2 = cand;
        break;
      }
    }
  }
  const_cast<ChartRadii&>(chart.radii()).xi1 = xi1;
  const_cast<ChartRadii&>(chart.radii()).xi2 = xi2;
  return {xi1, xi2};
}

}  // namespace ccharts
