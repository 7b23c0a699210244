#ifndef CCHARTS_CHART_HPP
#define CCHARTS_CHART_HPP

#include <map>
#include <optional>
#include <string>

#include "ccharts/ccmetric.hpp"
#include "ccharts/odecore.hpp"

namespace ccharts {

struct ChartConfig {
  double zeta = 0.5;
  int grid_half_res = 16;   // per-axis half resolution of the A grid
  double picard_tol = 1e-9;
  int rk4_steps = 400;      // flow resolution for Phi
  double eta_max = 0;       // 0: derived from the domain box
  int condition_c_dirs = 24;
  int eta_bisect_iters = 12;
  bool run_delta0 = true;
  Delta0Params delta0;
  std::optional<IndexTuple> forced_J0;  // 1-based original indices
  int residual_samples = 100;
  std::uint64_t seed = 1;
};

struct ChartRadii {
  double eta = 0;        // condition-C radius (probed)
  double eta0 = 0;       // min(eta, domain reach)
  double eta_prime = 0;  // Picard radius min(eta0, 1/(10 D))
  double eta1 = 0;       // injectivity radius min(kappa delta1, eta_prime)
  double kappa = 0;
  double Delta0 = 0;     // IFT Lipschitz-smallness radius
  double delta0 = 0;     // non-return probe estimate
  double delta1 = 0;     // min(Delta0, delta0, 1)
  double xi1 = 0, xi2 = 0;  // ball-nesting radii (radii_estimates)
};

struct IFTResult {
  double kappa = 0;
  double Delta0 = 0;
  double c0 = 0;         // inf-node |det M|
  double C0 = 0;         // sup-node ||M||_op
  double lipschitz = 0;  // Lipschitz constant of t -> M(t)
  double sup_inv = 0;    // sup-node ||M^{-1}||_op
};

/// kappa = (1/2) (sup ||M(t)^{-1}||)^{-1} and the Lipschitz-smallness radius,
/// from the proof's definitions; M(t) = (Y_1(t) | ... | Y_n(t)).
IFTResult ift_kappa(const std::function<Mat(const Vec&)>& Ymatrix, int n,
                    double eta, int res);

class Chart {
 public:
  const Vec& base_point() const { return x0_; }
  const IndexTuple& J0() const { return J0_; }
  double zeta() const { return zeta_; }
  const ChartRadii& radii() const { return radii_; }
  ChartRadii& radii() { return radii_; }
  const GridFunction& A() const { return A_; }
  const VectorSystem& system() const { return *system_; }

  /// Phi(t) = e^{t . X_{J0}} x0.
  Vec phi(const Vec& t) const;
  /// Consistent Jacobian X_{J0}(Phi(t)) ((I + A(t))^T)^{-1}.
  Mat dphi(const Vec& t) const;
  /// Pullback field Y_j (j is the original 1-based field index, any j <= q).
  Vec Y(int j, const Vec& t) const;
  /// Dependent coefficients b_k^l(t) for a field k outside J0.
  Vec dependent_coeffs(int k, const Vec& t) const;
  /// Pulled-back structure tensor c~_{j,k}^l(t) on the J0 basis (n x n x n).
  std::vector<std::vector<std::vector<double>>> pullback_structure(const Vec& t) const;

  /// Newton inversion of Phi; throws on non-convergence in 50 iterations.
  Vec inverse(const Vec& y, const Vec* t_guess = nullptr) const;
  bool in_image(const Vec& y) const;  // inverse converges with |t| < eta1

  /// Structure functions of the J0 basis at a point of the image:
  /// [X_bj, X_bl](y) = sum_k chat_{j,l}^k(y) X_bk(y).
  std::vector<std::vector<std::vector<double>>> basis_structure(const Vec& y) const;

  FlowOptions flow_options() const;

 private:
  friend std::pair<Chart, struct ChartDiagnostics> build_chart(
      const VectorSystem& S, const Vec& x0, const ChartConfig& cfg);
  std::shared_ptr<const VectorSystem> system_;
  std::vector<VectorField> basis_;  // the J0 fields, original order of J0_
  Vec x0_;
  IndexTuple J0_;
  std::vector<int> position_of_;  // original index -> basis slot or -1
  double zeta_ = 0;
  ChartRadii radii_;
  GridFunction A_;
  ChartConfig cfg_;
};

struct ChartDiagnostics {
  double D = 0;
  PicardReport picard;
  IFTResult ift;
  Delta0Report delta0;
  double dphi_residual_max = 0;    // max_j,t |dPhi Y_j - X_j o Phi| (FD dPhi)
  double det_identity_max_rel = 0; // |det dPhi| det(I+A) vs |det X_J0 o Phi|
  double injectivity_min_ratio = 0;
  bool injectivity_ok = false;
  double sup_A = 0;
  bool A_bounds_ok = false;  // A(0)=0, sup <= 1/2 (and 1/16 on the Picard ball)
  double bkl_residual_max = 0;
  double structure_crosscheck_max = 0;
  /// Tagged residuals and measured norms (admissible-constant bookkeeping is
  /// reported, never assumed).
  std::map<std::string, double> table;
};

std::pair<Chart, ChartDiagnostics> build_chart(const VectorSystem& S, const Vec& x0,
                                               const ChartConfig& cfg = {});

/// Independent pullback oracle: solve dPhi(t) v = X_j(Phi(t)) with a central
/// finite-difference dPhi.
Vec pullback_direct(const std::function<Vec(const Vec&)>& phi, const VectorField& Xj,
                    const Vec& t, double h_fd);

struct RadiiParams {
  CCGraphParams cc;
  int xi_grid = 12;       // candidate radii per level
  int boundary_samples = 40;
};

/// Largest grid radii with B_X(x0, xi2) inside B_{X_J0}(x0, xi1) inside
/// Phi(B^n(eta1)), verified on sampled near-boundary points.
std::pair<double, double> radii_estimates(Chart& chart, const VectorSystem& S,
                                          const RadiiParams& params = {});

struct InjectivityReport {
  double min_ratio = 0;
  bool ok = false;
  Vec witness_t1, witness_t2;
};

InjectivityReport verify_injectivity(const Chart& chart, int samples,
                                     std::uint64_t seed);

}  // namespace ccharts

#endif  // CCHARTS_CHART_HPP
