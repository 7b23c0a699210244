#ifndef CCHARTS_FLOWS_HPP
#define CCHARTS_FLOWS_HPP

#include <optional>
#include <vector>

#include "ccharts/fields.hpp"

namespace ccharts {

struct FlowOptions {
  int steps_per_unit_time = 200;  // fixed-step RK4
  double max_step = 0.05;
  double blowup_norm = 1e8;
  std::optional<Box> box;  // containment check; falls back to the field's system

  int step_count(double t) const;
};

/// Trajectory left the box or blew up; carries the first bad time.
struct FlowError : Error {
  double exit_time;
  FlowError(const std::string& msg, double t)
      : Error(msg + " (t = " + std::to_string(t) + ")"), exit_time(t) {}
};

/// e^{tX} x0 by classical RK4.
Vec flow(const VectorField& X, const Vec& x0, double t, const FlowOptions& opts = {});

/// States at the requested times (sorted, >= 0) along e^{tX} x0, one pass.
std::vector<Vec> flow_samples(const VectorField& X, const Vec& x0,
                              const std::vector<double>& times,
                              const FlowOptions& opts = {});

/// e^{a_1 X_1 + ... + a_q X_q} x0: time-1 flow of the frozen combination.
Vec exp_multi(const VectorSystem& S, const Vec& a, const Vec& x0,
              const FlowOptions& opts = {});
Vec exp_multi(const std::vector<VectorField>& fields, const Vec& a, const Vec& x0,
              const FlowOptions& opts = {});

struct ConditionCReport {
  bool holds = true;
  Vec witness;          // a failing coefficient vector when !holds
  double witness_time = 0.0;
  int directions_checked = 0;
};

/// Sampled certificate for condition C(x0, eta, U): directions are the +-axes
/// plus a deterministic low-discrepancy sphere set, radii approach eta from
/// below.  `holds` is necessary-condition checking, not a proof.
ConditionCReport check_condition_C(const std::vector<VectorField>& fields,
                                   const Vec& x0, double eta,
                                   const FlowOptions& opts = {}, int n_dirs = 32);
ConditionCReport check_condition_C(const VectorSystem& S, const Vec& x0, double eta,
                                   const FlowOptions& opts = {}, int n_dirs = 32);

struct Delta0Report {
  double delta0 = 0.0;      // largest grid radius with no sampled return
  bool return_found = false;
  Vec witness_x, witness_theta;
  double witness_r = 0.0;
};

struct Delta0Params {
  double delta_max = 1.0;
  int r_steps = 4000;       // dense r-grid resolution on (0, delta_max]
  int x_samples = 16;       // per box K
  int theta_samples = 32;   // sphere directions
  double return_tol_rel = 1e-3;  // times diam(K)
};

/// Non-return probe of the delta_0 constant: scans e^{r theta . X} x along a
/// dense r-grid; a return only counts after the trajectory first escaped a
/// 3*tol ball (the exact statement is a strict inequality at r > 0).
/// Combinations with theta . X(x) ~ 0 are excluded.
Delta0Report probe_delta0(const VectorSystem& S, const Box& K,
                          const Delta0Params& params = {},
                          const FlowOptions& opts = {});

/// Deterministic low-discrepancy points on S^{q-1} (Halton + Box-Muller),
/// prefixed by the +-axis directions.
std::vector<Vec> sphere_directions(int q, int count);

}  // namespace ccharts

#endif  // CCHARTS_FLOWS_HPP
