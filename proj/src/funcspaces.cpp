#include "ccharts/funcspaces.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ccharts {

ScalarFunction ScalarFunction::from_expr(Expr e, int n) {
  ScalarFunction s;
  s.n = n;
  s.expr_backed = true;
  s.expr = e;
  s.f = [e](const Vec& x) {
    return e.eval(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  };
  return s;
}

ScalarFunction ScalarFunction::from_string(const std::string& text, int n) {
  return from_expr(Expr::parse(text, n), n);
}

ScalarFunction ScalarFunction::native(int n, std::function<double(const Vec&)> f) {
  ScalarFunction s;
  s.n = n;
  s.f = std::move(f);
  return s;
}

ScalarFunction ScalarFunction::derivative(int var_1based) const {
  if (expr_backed) return from_expr(expr.differentiate(var_1based), n);
  auto base = f;
  int k = var_1based - 1;
  return native(n, [base, k](const Vec& x) {
    double h = 1e-4 * std::max(1.0, std::abs(x[k]));
    Vec xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    return (base(xp) - base(xm)) / (2 * h);
  });
}

bool NormDomain::contains(const Vec& x) const {
  if (is_ball()) return (x - center).norm() <= radius * (1 + 1e-12);
  return box.contains(x);
}

NormDomain NormDomain::ball(const Vec& c, double r) {
  NormDomain d;
  d.center = c;
  d.radius = r;
  d.box = Box::centered(c, Vec::Constant(c.size(), r));
  return d;
}

NormDomain NormDomain::of_box(const Box& b) {
  NormDomain d;
  d.radius = 0;
  d.box = b;
  d.center = 0.5 * (b.lo + b.hi);
  return d;
}

std::string NormReport::to_json() const {
  std::ostringstream os;
  os.precision(12);
  os << "{\"family\":\"" << family << "\",\"m\":" << m << ",\"l\":" << l
     << ",\"s\":" << s << ",\"value\":" << value << ",\"c0_part\":" << c0_part
     << ",\"seminorm_part\":" << seminorm_part
     << ",\"samples_used\":" << samples_used
     << ",\"samples_skipped\":" << samples_skipped << ",\"semantics\":\""
     << "lower-bound\"";
  if (!subfamily.empty()) os << ",\"subfamily\":\"" << subfamily << "\"";
  os << "}";
  return os.str();
}

namespace {

struct SampleFamily {
  std::vector<Vec> xs;                   // tensor grid inside the domain
  std::vector<std::pair<Vec, Vec>> h1;   // (x, h): x and x+h inside
  std::vector<std::pair<Vec, Vec>> h2;   // (x, h): x, x+h, x+2h inside
};

SampleFamily build_family(const NormDomain& dom, const NormGrid& grid, int n) {
  SampleFamily fam;
  const Box& b = dom.box;
  const int P = std::max(3, grid.points_per_axis);
  std::vector<int> idx(n, 0);
  for (;;) {
    Vec x(n);
    for (int d = 0; d < n; ++d)
      x[d] = b.lo[d] + (b.hi[d] - b.lo[d]) * idx[d] / (P - 1);
    if (dom.contains(x)) fam.xs.push_back(x);
    int d = 0;
    while (d < n && ++idx[d] == P) idx[d++] = 0;
    if (d == n) break;
  }

  std::vector<Vec> dirs;
  for (int d = 0; d < n; ++d) {
    Vec e = Vec::Zero(n);
    e[d] = 1;
    dirs.push_back(e);
    dirs.push_back(Vec(-e));
  }
  if (n >= 2)
    for (const Vec& v : sphere_directions(n, grid.extra_directions))
      dirs.push_back(v);

  double h0 = 0.5 * (b.hi - b.lo).maxCoeff();
  for (const Vec& x : fam.xs) {
    for (const Vec& dir : dirs) {
      double mag = h0;
      for (int k = 0; k < grid.dyadic_levels; ++k, mag *= 0.5) {
        Vec h = mag * dir;
        bool in1 = dom.contains(Vec(x + h));
        if (!in1) continue;
        fam.h1.emplace_back(x, h);
        if (dom.contains(Vec(x + 2 * h))) {
          fam.h2.emplace_back(x, h);
          // sub-pair of the triple: keeps the Zygmund-vs-Holder estimator
          // inequalities valid per sample
          fam.h1.emplace_back(Vec(x + h), h);
        }
      }
    }
  }
  return fam;
}

// All multi-indices with |alpha| <= m as per-variable counts.
std::vector<std::vector<int>> multi_indices(int n, int m) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(n, 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == n) {
      out.push_back(cur);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      cur[pos] = k;
      rec(pos + 1, left - k);
    }
    cur[pos] = 0;
  };
  rec(0, m);
  return out;
}

ScalarFunction apply_alpha(const ScalarFunction& f, const std::vector<int>& alpha) {
  ScalarFunction g = f;
  for (int d = 0; d < static_cast<int>(alpha.size()); ++d)
    for (int k = 0; k < alpha[d]; ++k) g = g.derivative(d + 1);
  return g;
}

struct SupAccum {
  double best = 0;
  int used = 0, skipped = 0;
  template <class Fn>
  void feed(const Fn& fn) {
    try {
      double v = fn();
      if (std::isfinite(v)) {
        best = std::max(best, v);
        ++used;
      } else {
        ++skipped;
      }
    } catch (const DomainError&) {
      ++skipped;
    }
  }
};

}  // namespace

NormReport holder_norm(const ScalarFunction& f, const NormDomain& dom, int m,
                       double s, const NormGrid& grid) {
  if (m < 0 || s < 0 || s > 1) throw Error("holder_norm: need m >= 0, s in [0,1]");
  SampleFamily fam = build_family(dom, grid, f.n);
  NormReport rep;
  rep.family = s == 0 ? "Cm" : "Holder";
  rep.m = m;
  rep.s = s;
  for (const auto& alpha : multi_indices(f.n, m)) {
    ScalarFunction g = apply_alpha(f, alpha);
    SupAccum c0;
    for (const Vec& x : fam.xs) c0.feed([&] { return std::abs(g(x)); });
    rep.c0_part += c0.best;
    rep.value += c0.best;
    rep.samples_used += c0.used;
    rep.samples_skipped += c0.skipped;
    if (s > 0) {
      SupAccum semi;
      for (const auto& [x, h] : fam.h1)
        semi.feed([&] {
          return std::abs(g(Vec(x + h)) - g(x)) / std::pow(h.norm(), s);
        });
      rep.seminorm_part += semi.best;
      rep.value += semi.best;
      rep.samples_used += semi.used;
      rep.samples_skipped += semi.skipped;
    }
  }
  return rep;
}

namespace {

// base-case Zygmund: H^{0,s/2} + second differences, s in (0,1]
NormReport zygmund_base(const ScalarFunction& f, const NormDomain& dom, double s,
                        const NormGrid& grid, const SampleFamily& fam) {
  NormReport h = holder_norm(f, dom, 0, s / 2, grid);
  NormReport rep;
  rep.family = "Zygmund";
  rep.s = s;
  rep.samples_used = h.samples_used;
  rep.samples_skipped = h.samples_skipped;
  SupAccum second;
  for (const auto& [x, h2] : fam.h2)
    second.feed([&] {
      return std::abs(f(Vec(x + 2 * h2)) - 2 * f(Vec(x + h2)) + f(x)) /
             std::pow(h2.norm(), s);
    });
  rep.c0_part = h.value;
  rep.seminorm_part = second.best;
  rep.value = h.value + second.best;
  rep.samples_used += second.used;
  rep.samples_skipped += second.skipped;
  return rep;
}

}  // namespace

NormReport zygmund_norm(const ScalarFunction& f, const NormDomain& dom, double s,
                        const NormGrid& grid) {
  if (s <= 0) throw Error("zygmund_norm: need s > 0");
  SampleFamily fam = build_family(dom, grid, f.n);
  if (s <= 1) return zygmund_base(f, dom, s, grid, fam);
  // recursion through derivatives: s = m + sigma with sigma in (0,1]
  int m = static_cast<int>(std::ceil(s)) - 1;
  double sigma = s - m;
  NormReport rep;
  rep.family = "Zygmund";
  rep.m = m;
  rep.s = s;
  for (const auto& alpha : multi_indices(f.n, m)) {
    NormReport part = zygmund_base(apply_alpha(f, alpha), dom, sigma, grid, fam);
    rep.value += part.value;
    rep.c0_part += part.c0_part;
    rep.seminorm_part += part.seminorm_part;
    rep.samples_used += part.samples_used;
    rep.samples_skipped += part.samples_skipped;
  }
  return rep;
}

NormReport cml_norm(const ScalarFunction& f, int m, int l, double omega_exponent,
                    const NormDomain& dom, const NormGrid& grid) {
  if (l < 0 || l > 2) throw Error("cml_norm: l must be 0, 1, or 2");
  SampleFamily fam = build_family(dom, grid, f.n);
  NormReport rep;
  rep.family = "Cml";
  rep.m = m;
  rep.l = l;
  rep.s = omega_exponent;
  for (const auto& alpha : multi_indices(f.n, m)) {
    ScalarFunction g = apply_alpha(f, alpha);
    SupAccum c0;
    for (const Vec& x : fam.xs) c0.feed([&] { return std::abs(g(x)); });
    rep.value += c0.best;
    rep.c0_part += c0.best;
    rep.samples_used += c0.used;
    rep.samples_skipped += c0.skipped;
    if (l >= 1) {
      SupAccum d1;
      for (const auto& [x, h] : fam.h1)
        d1.feed([&] {
          return std::abs(g(Vec(x + h)) - g(x)) /
                 std::pow(h.norm(), omega_exponent);
        });
      rep.value += d1.best;
      rep.samples_used += d1.used;
      rep.samples_skipped += d1.skipped;
      if (l == 1) rep.seminorm_part += d1.best;
    }
    if (l >= 2) {
      SupAccum d2;
      for (const auto& [x, h] : fam.h2)
        d2.feed([&] {
          return std::abs(g(Vec(x + 2 * h)) - 2 * g(Vec(x + h)) + g(x)) /
                 std::pow(h.norm(), 2 * omega_exponent);
        });
      rep.value += d2.best;
      rep.seminorm_part += d2.best;
      rep.samples_used += d2.used;
      rep.samples_skipped += d2.skipped;
    }
  }
  return rep;
}

NormReport cml_norm(const GridFunction& F, int m, int l, double omega_exponent,
                    const NormGrid& grid) {
  // wrap interpolation as scalar functions per matrix entry and take the
  // entrywise max of the reports; derivatives use grid-spacing differences
  if (m > 1) throw Error("cml_norm on grids supports m <= 1");
  const int n = F.dim();
  const double eta = F.radius();
  const double spacing = eta / F.half_res();
  NormDomain dom = NormDomain::ball(Vec::Zero(n), eta * (1.0 - 1e-9));
  NormGrid g2 = grid;
  g2.points_per_axis = std::min(grid.points_per_axis, 2 * F.half_res() + 1);

  NormReport total;
  total.family = "Cml";
  total.m = m;
  total.l = l;
  total.s = omega_exponent;
  for (int r = 0; r < F.rows(); ++r)
    for (int c = 0; c < F.cols(); ++c) {
      for (const auto& alpha : multi_indices(n, m)) {
        ScalarFunction entry = ScalarFunction::native(n, [&F, r, c, alpha, spacing,
                                                          eta](const Vec& x) {
          // centered grid-spacing differences for the derivative levels
          std::vector<std::pair<Vec, double>> stack{{x, 1.0}};
          for (int dvar = 0; dvar < static_cast<int>(alpha.size()); ++dvar) {
            for (int k = 0; k < alpha[dvar]; ++k) {
              std::vector<std::pair<Vec, double>> next;
              for (auto& [p, w] : stack) {
                Vec pp = p, pm = p;
                pp[dvar] += spacing;
                pm[dvar] -= spacing;
                if (pp.norm() > eta || pm.norm() > eta)
                  throw DomainError("stencil outside the ball");
                next.emplace_back(pp, w / (2 * spacing));
                next.emplace_back(pm, -w / (2 * spacing));
              }
              stack = std::move(next);
            }
          }
          double v = 0;
          for (auto& [p, w] : stack) v += w * F(p)(r, c);
          return v;
        });
        NormReport part = cml_norm(entry, 0, l, omega_exponent, dom, g2);
        total.value = std::max(total.value, part.value);
        total.c0_part = std::max(total.c0_part, part.c0_part);
        total.seminorm_part = std::max(total.seminorm_part, part.seminorm_part);
        total.samples_used += part.samples_used;
        total.samples_skipped += part.samples_skipped;
      }
    }
  return total;
}

namespace {

// ordered multi-indices over {1..q} of length <= m (the empty word included)
std::vector<std::vector<int>> ordered_words(int q, int m) {
  std::vector<std::vector<int>> out{{}};
  std::vector<std::vector<int>> prev{{}};
  for (int len = 1; len <= m; ++len) {
    std::vector<std::vector<int>> cur;
    for (const auto& w : prev)
      for (int j = 1; j <= q; ++j) {
        auto nw = w;
        nw.push_back(j);
        cur.push_back(nw);
      }
    out.insert(out.end(), cur.begin(), cur.end());
    prev = std::move(cur);
  }
  return out;
}

// X_j f by central differences along the flow of X_j
double flow_derivative(const ScalarFunction& g, const VectorSystem& S, int j,
                       const Vec& x, double h) {
  FlowOptions opts;
  opts.box = S.domain();
  opts.steps_per_unit_time = 4;
  opts.max_step = h;
  Vec fwd = flow(S.field(j), x, h, opts);
  Vec bwd = flow(S.field(j), x, -h, opts);
  return (g(fwd) - g(bwd)) / (2 * h);
}

ScalarFunction apply_word(const ScalarFunction& f, const VectorSystem& S,
                          const std::vector<int>& word, double h) {
  ScalarFunction g = f;
  // rightmost field acts first: X^{(2,1)} = X_2 X_1 f
  for (auto it = word.rbegin(); it != word.rend(); ++it) {
    int j = *it;
    ScalarFunction inner = g;
    const VectorSystem* sys = &S;
    g = ScalarFunction::native(f.n, [inner, sys, j, h](const Vec& x) {
      return flow_derivative(inner, *sys, j, x, h);
    });
  }
  return g;
}

}  // namespace

NormReport adapted_holder_norm(const ScalarFunction& f, const VectorSystem& S,
                               const NormDomain& dom, int m, double s,
                               const NormGrid& grid, const AdaptedParams& params) {
  if (m < 0 || s < 0 || s > 1) throw Error("adapted_holder_norm: bad (m, s)");
  SampleFamily fam = build_family(dom, grid, f.n);
  NormReport rep;
  rep.family = s == 0 ? "CmX" : "HolderX";
  rep.m = m;
  rep.s = s;

  // distance fields from a deterministic subset of the grid
  std::vector<std::pair<Vec, CCGraph>> floods;
  if (s > 0) {
    std::size_t stride =
        std::max<std::size_t>(1, fam.xs.size() / params.base_points);
    double budget = 1.2 * (dom.box.hi - dom.box.lo).norm();
    for (std::size_t i = 0; i < fam.xs.size(); i += stride) {
      Box padded = dom.box;
      floods.emplace_back(fam.xs[i],
                          cc_flood(S, fam.xs[i], budget, padded, params.cc));
    }
  }

  for (const auto& word : ordered_words(S.num_fields(), m)) {
    ScalarFunction g = apply_word(f, S, word, params.flow_h);
    SupAccum c0;
    for (const Vec& x : fam.xs) c0.feed([&] { return std::abs(g(x)); });
    rep.c0_part += c0.best;
    rep.value += c0.best;
    rep.samples_used += c0.used;
    rep.samples_skipped += c0.skipped;
    if (s > 0) {
      SupAccum semi;
      for (const auto& [base, flood] : floods) {
        double gb;
        try {
          gb = g(base);
        } catch (const DomainError&) {
          ++semi.skipped;
          continue;
        }
        for (const Vec& y : fam.xs) {
          double rho = flood.query(y);
          if (!(rho > 1e-12) || rho == CCGraph::kUnreachable) continue;
          semi.feed([&] { return std::abs(gb - g(y)) / std::pow(rho, s); });
        }
      }
      rep.seminorm_part += semi.best;
      rep.value += semi.best;
      rep.samples_used += semi.used;
      rep.samples_skipped += semi.skipped;
    }
  }
  return rep;
}

NormReport adapted_zygmund_norm(const ScalarFunction& f, const VectorSystem& S,
                                const NormDomain& dom, double s,
                                const NormGrid& grid, const AdaptedParams& params) {
  if (s <= 0 || s > 1) throw Error("adapted_zygmund_norm: base case needs s in (0,1]");
  NormReport h = adapted_holder_norm(f, S, dom, 0, s / 2, grid, params);
  NormReport rep;
  rep.family = "ZygmundX";
  rep.s = s;
  rep.subfamily = "constant-controls";
  rep.c0_part = h.value;
  rep.samples_used = h.samples_used;
  rep.samples_skipped = h.samples_skipped;

  SampleFamily fam = build_family(dom, grid, f.n);
  auto dirs = sphere_directions(S.num_fields(), grid.extra_directions + 4);
  const double scale = 1.0 - 1e-9;  // keep sum d_j^2 < 1
  double hmax = 0.5 * (dom.box.hi - dom.box.lo).maxCoeff();

  FlowOptions fo;
  fo.box = S.domain();
  SupAccum second;
  for (const Vec& x : fam.xs) {
    for (const Vec& dir : dirs) {
      Vec d = scale * dir;
      // gamma(t) = e^{t (d . X)} x at t = h, 2h
      auto combo = VectorField::native(f.n, [&S, d](const Vec& p) {
        Vec v = d[0] * S.field(1)(p);
        for (int j = 1; j < S.num_fields(); ++j) v += d[j] * S.field(j + 1)(p);
        return v;
      });
      double mag = hmax;
      for (int k = 0; k < grid.dyadic_levels; ++k, mag *= 0.5) {
        second.feed([&]() -> double {
          Vec g1, g2;
          try {
            g1 = flow(combo, x, mag, fo);
            g2 = flow(combo, g1, mag, fo);
          } catch (const FlowError&) {
            throw DomainError("path exits the domain");
          }
          if (!dom.contains(g1) || !dom.contains(g2))
            throw DomainError("path exits the sampling domain");
          return std::abs(f(g2) - 2 * f(g1) + f(x)) / std::pow(mag, s);
        });
      }
    }
  }
  rep.seminorm_part = second.best;
  rep.value = rep.c0_part + second.best;
  rep.samples_used += second.used;
  rep.samples_skipped += second.skipped;
  return rep;
}

std::vector<InclusionCheck> inclusion_check(const ScalarFunction& f,
                                            const NormDomain& dom, double s1,
                                            double s2, const NormGrid& grid) {
  if (!(s1 <= s2)) throw Error("inclusion_check: need s1 <= s2");
  std::vector<InclusionCheck> out;
  NormReport h_s1 = holder_norm(f, dom, 0, s1, grid);
  NormReport h_s2 = holder_norm(f, dom, 0, s2, grid);
  NormReport h_1 = holder_norm(f, dom, 0, 1.0, grid);
  NormReport c_1 = holder_norm(f, dom, 1, 0.0, grid);
  NormReport z_s1 = zygmund_norm(f, dom, s1, grid);
  NormReport z_s2 = zygmund_norm(f, dom, s2, grid);
  out.push_back({"H^{0,s1} <= 3 H^{0,s2}", h_s1.value, h_s2.value, 3.0});
  out.push_back({"H^{0,1} <= C^1", h_1.value, c_1.value, 1.0});
  out.push_back({"Z^{s2} <= 5 H^{0,s2}", z_s2.value, h_s2.value, 5.0});
  out.push_back({"Z^{s1} <= 15 Z^{s2}", z_s1.value, z_s2.value, 15.0});
  return out;
}

}  // namespace ccharts
