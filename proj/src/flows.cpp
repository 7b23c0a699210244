#include "ccharts/flows.hpp"

#include <algorithm>
#include <cmath>

namespace ccharts {

int FlowOptions::step_count(double t) const {
  double span = std::abs(t);
  int by_rate = static_cast<int>(std::ceil(span * steps_per_unit_time));
  int by_step = static_cast<int>(std::ceil(span / max_step));
  return std::max({1, by_rate, by_step});
}

namespace {

template <class F>
Vec rk4_integrate(const F& rhs, Vec y, double t0, double t1, int steps,
                  const FlowOptions& opts, const Box* box) {
  const double h = (t1 - t0) / steps;
  double t = t0;
  for (int i = 0; i < steps; ++i) {
    Vec k1 = rhs(y);
    Vec k2 = rhs(Vec(y + 0.5 * h * k1));
    Vec k3 = rhs(Vec(y + 0.5 * h * k2));
    Vec k4 = rhs(Vec(y + h * k3));
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
    if (!y.allFinite() || y.norm() > opts.blowup_norm)
      throw FlowError("trajectory blew up", t);
    if (box && !box->contains(y, 1e-12 * (1.0 + y.norm())))
      throw FlowError("trajectory left the domain box", t);
  }
  return y;
}

}  // namespace

Vec flow(const VectorField& X, const Vec& x0, double t, const FlowOptions& opts) {
  if (opts.steps_per_unit_time < 1) throw Error("steps_per_unit_time must be >= 1");
  const Box* box = opts.box ? &*opts.box : nullptr;
  if (t == 0.0) return x0;
  auto rhs = [&X](const Vec& y) { return X(y); };
  return rk4_integrate(rhs, x0, 0.0, t, opts.step_count(t), opts, box);
}

std::vector<Vec> flow_samples(const VectorField& X, const Vec& x0,
                              const std::vector<double>& times,
                              const FlowOptions& opts) {
  std::vector<Vec> out;
  out.reserve(times.size());
  const Box* box = opts.box ? &*opts.box : nullptr;
  auto rhs = [&X](const Vec& y) { return X(y); };
  Vec y = x0;
  double t = 0.0;
  for (double target : times) {
    if (target < t) throw Error("flow_samples: times must be sorted ascending");
    if (target > t) {
      y = rk4_integrate(rhs, y, t, target, opts.step_count(target - t), opts, box);
      t = target;
    }
    out.push_back(y);
  }
  return out;
}

Vec exp_multi(const std::vector<VectorField>& fields, const Vec& a, const Vec& x0,
              const FlowOptions& opts) {
  if (fields.empty()) throw Error("exp_multi: no fields");
  if (a.size() != static_cast<Eigen::Index>(fields.size()))
    throw Error("exp_multi: coefficient count mismatch");
  if (!a.allFinite()) throw Error("exp_multi: non-finite coefficients");
  const Box* box = opts.box ? &*opts.box : nullptr;
  auto rhs = [&fields, &a](const Vec& y) {
    Vec v = a[0] * fields[0](y);
    for (std::size_t j = 1; j < fields.size(); ++j) v += a[j] * fields[j](y);
    return v;
  };
  // step density scales with |a| so e^{a.X} costs like a time-|a| flow
  int steps = std::max(1, opts.step_count(a.norm()));
  return rk4_integrate(rhs, x0, 0.0, 1.0, steps, opts, box);
}

Vec exp_multi(const VectorSystem& S, const Vec& a, const Vec& x0,
              const FlowOptions& opts) {
  FlowOptions o = opts;
  if (!o.box) o.box = S.domain();
  return exp_multi(S.fields(), a, x0, o);
}

std::vector<Vec> sphere_directions(int q, int count) {
  std::vector<Vec> dirs;
  for (int j = 0; j < q; ++j) {
    Vec e = Vec::Zero(q);
    e[j] = 1.0;
    dirs.push_back(e);
    dirs.push_back(Vec(-e));
  }
  if (q == 1) return dirs;
  if (q == 2) {  // uniform angles; doubling the count nests the set
    for (int i = 0; i < count; ++i) {
      double th = 2 * M_PI * i / count;
      Vec g(2);
      g << std::cos(th), std::sin(th);
      dirs.push_back(g);
    }
    return dirs;
  }
  if (q == 3) {  // Fibonacci sphere
    const double golden = (1 + std::sqrt(5.0)) / 2;
    for (int i = 0; i < count; ++i) {
      double z = 1.0 - (2.0 * i + 1.0) / count;
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      double th = 2 * M_PI * i / golden;
      Vec g(3);
      g << r * std::cos(th), r * std::sin(th), z;
      dirs.push_back(g);
    }
    return dirs;
  }
  // Halton pairs through Box-Muller give deterministic quasi-normal vectors.
  auto halton = [](int index, int base) {
    double f = 1.0, r = 0.0;
    for (int i = index; i > 0; i /= base) {
      f /= base;
      r += f * (i % base);
    }
    return r;
  };
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  int produced = 0;
  int idx = 1;
  while (produced < count) {
    Vec g(q);
    for (int j = 0; j < q; j += 2) {
      double u1 = halton(idx, primes[(j) % 12]);
      double u2 = halton(idx, primes[(j + 1) % 12]);
      u1 = std::max(u1, 1e-12);
      double r = std::sqrt(-2.0 * std::log(u1));
      g[j] = r * std::cos(2 * M_PI * u2);
      if (j + 1 < q) g[j + 1] = r * std::sin(2 * M_PI * u2);
    }
    ++idx;
    double nrm = g.norm();
    if (nrm < 1e-9) continue;
    dirs.push_back(Vec(g / nrm));
    ++produced;
  }
  return dirs;
}

ConditionCReport check_condition_C(const std::vector<VectorField>& fields,
                                   const Vec& x0, double eta,
                                   const FlowOptions& opts, int n_dirs) {
  if (eta <= 0.0) throw Error("condition C probe needs eta > 0");
  const int q = static_cast<int>(fields.size());
  ConditionCReport rep;
  auto dirs = sphere_directions(q, n_dirs);
  const double radii[] = {0.25, 0.5, 0.75, 0.9, 0.99, 1.0 - 1e-9};
  for (const Vec& th : dirs) {
    for (double frac : radii) {
      Vec a = (frac * eta) * th;
      ++rep.directions_checked;
      try {
        exp_multi(fields, a, x0, opts);
      } catch (const FlowError& e) {
        rep.holds = false;
        rep.witness = a;
        rep.witness_time = e.exit_time;
        return rep;
      }
    }
  }
  return rep;
}

ConditionCReport check_condition_C(const VectorSystem& S, const Vec& x0, double eta,
                                   const FlowOptions& opts, int n_dirs) {
  FlowOptions o = opts;
  if (!o.box) o.box = S.domain();
  return check_condition_C(S.fields(), x0, eta, o, n_dirs);
}

Delta0Report probe_delta0(const VectorSystem& S, const Box& K,
                          const Delta0Params& params, const FlowOptions& opts) {
  if (params.r_steps < 1 || params.x_samples < 1 || params.theta_samples < 1)
    throw Error("probe_delta0: grids must be non-empty");
  const int n = S.dim();
  const int q = S.num_fields();
  const double tol = params.return_tol_rel * K.diameter();
  const double escape = 3.0 * tol;
  const double h = params.delta_max / params.r_steps;

  // Deterministic x-grid inside K (Halton points, so any count works).
  auto halton = [](int index, int base) {
    double f = 1.0, r = 0.0;
    for (int i = index; i > 0; i /= base) {
      f /= base;
      r += f * (i % base);
    }
    return r;
  };
  static const int primes[] = {2, 3, 5, 7, 11, 13};
  std::vector<Vec> xs;
  for (int i = 1; i <= params.x_samples; ++i) {
    Vec x(n);
    for (int d = 0; d < n; ++d)
      x[d] = K.lo[d] + (K.hi[d] - K.lo[d]) * halton(i, primes[d % 6]);
    xs.push_back(x);
  }
  auto dirs = sphere_directions(q, params.theta_samples);

  double first_return_r = params.delta_max + h;  // sentinel: none
  Delta0Report rep;
  for (const Vec& x : xs) {
    Mat M = S.frame(x);
    double fieldmax = 0.0;
    for (int j = 0; j < q; ++j) fieldmax = std::max(fieldmax, M.col(j).norm());
    for (const Vec& th : dirs) {
      Vec v0 = M * th;
      if (v0.norm() <= 1e-12 * std::max(1.0, fieldmax)) continue;  // zero combination
      auto rhs = [&S, &th](const Vec& y) {
        Vec v = th[0] * S.field(1)(y);
        for (int j = 1; j < S.num_fields(); ++j) v += th[j] * S.field(j + 1)(y);
        return v;
      };
      Vec y = x;
      bool escaped = false;
      double r = 0.0;
      try {
        for (int i = 1; i <= params.r_steps; ++i) {
          Vec k1 = rhs(y);
          Vec k2 = rhs(Vec(y + 0.5 * h * k1));
          Vec k3 = rhs(Vec(y + 0.5 * h * k2));
          Vec k4 = rhs(Vec(y + h * k3));
          y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
          r = i * h;
          if (!y.allFinite() || y.norm() > opts.blowup_norm) break;
          double dist = (y - x).norm();
          if (!escaped) {
            if (dist > escape) escaped = true;
          } else if (dist < tol) {
            if (r < first_return_r) {
              first_return_r = r;
              rep.return_found = true;
              rep.witness_x = x;
              rep.witness_theta = th;
              rep.witness_r = r;
            }
            break;
          }
          if (r >= first_return_r) break;  // later returns cannot matter
        }
      } catch (...) {
        // blow-up along a probe ray is not a return
      }
    }
  }
  rep.delta0 = rep.return_found ? std::max(0.0, first_return_r - h)
                                : params.delta_max;
  return rep;
}

}  // namespace ccharts
