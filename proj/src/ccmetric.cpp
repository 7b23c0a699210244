#include "ccharts/ccmetric.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <queue>

#include "ccharts/parallel.hpp"

namespace ccharts {

int CCGraphParams::auto_cells(int n) const {
  if (cells_per_axis > 0) return cells_per_axis;
  return n <= 1 ? 512 : n == 2 ? 192 : n == 3 ? 64 : 24;
}

int CCGraphParams::auto_dirs(int q) const {
  if (n_dirs > 0) return n_dirs;
  return q <= 2 ? 96 : q == 3 ? 96 : 128;
}

double counter_uniform(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z = z ^ (z >> 31);
  return (z >> 11) * 0x1.0p-53;
}

int CCGraph::cell_of(const Vec& x) const {
  int flat = 0;
  for (int d = 0; d < n_; ++d) {
    double u = (x[d] - box_.lo[d]) / cell_size_[d];
    if (u < 0.0 || u >= dims_[d]) return -1;
    flat += static_cast<int>(u) * strides_[d];
  }
  return flat;
}

CCGraph cc_flood(const VectorSystem& S, const Vec& x, double budget, const Box& box,
                 const CCGraphParams& params, const CCGraph* warm_start) {
  if (budget <= 0) throw Error("cc_flood: budget must be positive");
  if (!box.contains(x)) throw Error("cc_flood: center outside the box");
  const int n = S.dim();
  const int q = S.num_fields();

  CCGraph g;
  g.center_ = x;
  g.box_ = box;
  g.budget_ = budget;
  g.params_ = params;
  g.n_ = n;
  g.system_ = &S;
  int cells = params.auto_cells(n);
  g.dims_.assign(n, cells);
  g.strides_.assign(n, 1);
  for (int d = 1; d < n; ++d) g.strides_[d] = g.strides_[d - 1] * g.dims_[d - 1];
  g.cell_size_ = Vec(n);
  for (int d = 0; d < n; ++d)
    g.cell_size_[d] = (box.hi[d] - box.lo[d]) / g.dims_[d];
  int total = g.strides_[n - 1] * g.dims_[n - 1];
  g.cell_node_.assign(total, -1);

  const double tau = budget / params.seg_count;
  auto dirs = sphere_directions(q, params.auto_dirs(q));

  // (dist, cell) min-heap with lazy deletion; ties resolved by cell index so
  // the expansion order is deterministic.
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;

  auto relax = [&](const Vec& pos, double dist, int parent, double edge_len) {
    int cell = g.cell_of(pos);
    if (cell < 0) return;
    int& slot = g.cell_node_[cell];
    if (slot >= 0 && g.nodes_[slot].dist <= dist) return;
    if (slot < 0) {
      slot = static_cast<int>(g.nodes_.size());
      g.nodes_.push_back({pos, dist, parent, edge_len});
    } else {
      g.nodes_[slot] = {pos, dist, parent, edge_len};
    }
    heap.emplace(dist, cell);
  };

  relax(x, 0.0, -1, 0.0);
  if (warm_start) {
    for (const auto& node : warm_start->nodes_)
      if (node.dist <= budget) relax(node.position, node.dist, -1, 0.0);
  }
  const double cell_min = g.cell_size_.minCoeff();
  const int walk_len = 16;  // sub-steps per expansion, ~5 cells of reach
  while (!heap.empty()) {
    auto [dist, cell] = heap.top();
    heap.pop();
    int ni = g.cell_node_[cell];
    if (ni < 0 || g.nodes_[ni].dist < dist) continue;  // stale entry
    if (dist >= budget) continue;
    const Vec u = g.nodes_[ni].position;
    for (const Vec& a : dirs) {
      auto rhs = [&](const Vec& p) {
        Vec v = a[0] * S.field(1)(p);
        for (int j = 1; j < q; ++j) v += a[j] * S.field(j + 1)(p);
        return v;
      };
      double speed = rhs(u).norm();
      if (speed <= 1e-14) continue;
      // sub-step: ~3 steps per cell crossing; tau is the resolution floor.
      // Every intermediate position is relaxed with its exact elapsed time,
      // so a step shorter than a cell cannot stall the frontier.
      double h = std::max(std::min(cell_min / (3.0 * speed), budget / 32.0), tau);
      Vec y = u;
      double t = 0.0;
      for (int k = 0; k < walk_len; ++k) {
        if (dist + t + h > budget) break;
        Vec k1 = rhs(y);
        Vec k2 = rhs(Vec(y + 0.5 * h * k1));
        Vec k3 = rhs(Vec(y + 0.5 * h * k2));
        Vec k4 = rhs(Vec(y + h * k3));
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
        if (!y.allFinite() || !box.contains(y)) break;
        relax(y, dist + t, ni, t);
      }
    }
  }
  return g;
}

double CCGraph::query(const Vec& y) const {
  if (cell_of(y) < 0) return kUnreachable;
  double best = kUnreachable;
  // scan the 3^n cell neighborhood of y
  std::vector<int> base(n_);
  for (int d = 0; d < n_; ++d)
    base[d] = static_cast<int>((y[d] - box_.lo[d]) / cell_size_[d]);
  int combos = 1;
  for (int d = 0; d < n_; ++d) combos *= 3;
  double diag = cell_size_.norm();
  for (int c = 0; c < combos; ++c) {
    int flat = 0, rem = c;
    bool valid = true;
    for (int d = 0; d < n_; ++d) {
      int off = rem % 3 - 1;
      rem /= 3;
      int idx = base[d] + off;
      if (idx < 0 || idx >= dims_[d]) {
        valid = false;
        break;
      }
      flat += idx * strides_[d];
    }
    if (!valid) continue;
    int ni = cell_node_[flat];
    if (ni < 0) continue;
    const Node& node = nodes_[ni];
    Vec delta_pos = y - node.position;
    double dn = delta_pos.norm();
    if (dn <= 1e-14) {
      best = std::min(best, node.dist);
      continue;
    }
    if (dn > 2.0 * diag) continue;
    // local chord: minimum-norm control with M((u+y)/2) a = y - u
    Mat M = system_->frame(Vec(0.5 * (node.position + y)));
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(M);
    Vec a = cod.solve(delta_pos);
    double residual = (M * a - delta_pos).norm();
    if (residual <= 1e-7 * dn) {
      best = std::min(best, node.dist + a.norm());
    } else if (c == (combos - 1) / 2) {
      // rank-deficient direction inside y's own cell: fall back to the
      // representative's distance (cell-quantized membership)
      best = std::min(best, node.dist);
    }
  }
  return best;
}

double cc_distance(const VectorSystem& S, const Vec& x, const Vec& y,
                   const CCGraphParams& params) {
  if (!S.domain().contains(x) || !S.domain().contains(y))
    throw Error("cc_distance: points must lie in the domain");
  if ((x - y).norm() == 0.0) return 0.0;

  // initial budget from the local chord estimate, then grow
  Mat M = S.frame(Vec(0.5 * (x + y)));
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(M);
  Vec a = cod.solve(Vec(y - x));
  double guess = ((M * a - (y - x)).norm() <= 1e-7 * (y - x).norm())
                     ? a.norm()
                     : (y - x).norm();
  double budget = std::max(1.5 * guess, 1e-3);
  while (budget <= params.max_budget) {
    // box: padded bounding box of {x, y}, clipped to the domain
    Vec lo = x.cwiseMin(y), hi = x.cwiseMax(y);
    Vec pad = Vec::Constant(S.dim(), 0.75 * std::max((x - y).norm(), budget * 0.5));
    Box box{Vec(lo - pad), Vec(hi + pad)};
    for (int d = 0; d < S.dim(); ++d) {
      box.lo[d] = std::max(box.lo[d], S.domain().lo[d]);
      box.hi[d] = std::min(box.hi[d], S.domain().hi[d]);
    }
    CCGraph g = cc_flood(S, x, budget, box, params);
    double d = g.query(y);
    if (d < CCGraph::kUnreachable && d <= budget) return d;
    budget *= 2.0;
  }
  return CCGraph::kUnreachable;
}

bool ball_membership(const VectorSystem& S, const Vec& x, double delta, const Vec& y,
                     const CCGraphParams& params) {
  if (delta <= 0) throw Error("ball_membership: delta must be positive");
  Box box = mc_bounding_box(S, x, delta);
  CCGraph g = cc_flood(S, x, delta, box, params);
  double d = g.query(y);
  if (d < 1e-3 * delta) return true;  // resolution floor
  return d < delta;
}

Box mc_bounding_box(const VectorSystem& S, const Vec& x, double delta) {
  const int n = S.dim();
  const int q = S.num_fields();
  Vec half = Vec::Constant(n, 1e-9);
  for (int pass = 0; pass < 3; ++pass) {
    Box box = Box::centered(x, half);
    for (int d = 0; d < n; ++d) {
      box.lo[d] = std::max(box.lo[d], S.domain().lo[d]);
      box.hi[d] = std::min(box.hi[d], S.domain().hi[d]);
    }
    // per-axis sup over a small lattice of the box
    Vec sup = Vec::Zero(n);
    const int steps = 5;
    std::vector<int> idx(n, 0);
    for (;;) {
      Vec p(n);
      for (int d = 0; d < n; ++d)
        p[d] = box.lo[d] + (box.hi[d] - box.lo[d]) * idx[d] / (steps - 1);
      for (int j = 1; j <= q; ++j) {
        Vec v = S.field(j)(p);
        for (int d = 0; d < n; ++d) sup[d] = std::max(sup[d], std::abs(v[d]));
      }
      int d = 0;
      while (d < n && ++idx[d] == steps) idx[d++] = 0;
      if (d == n) break;
    }
    half = 1.15 * delta * q * sup;
    for (int d = 0; d < n; ++d) half[d] = std::max(half[d], 1e-9);
  }
  Box box = Box::centered(x, half);
  for (int d = 0; d < n; ++d) {
    box.lo[d] = std::max(box.lo[d], S.domain().lo[d]);
    box.hi[d] = std::min(box.hi[d], S.domain().hi[d]);
  }
  return box;
}

void BallEstimate::write_csv_header(std::ostream& os) {
  os << "center,delta,volume,stderr,samples,seed\n";
}

void BallEstimate::write_csv_row(std::ostream& os) const {
  os.precision(12);
  os << '"';
  for (int i = 0; i < center.size(); ++i) {
    if (i) os << ' ';
    os << center[i];
  }
  os << '"' << ',' << delta << ',' << volume << ',' << stderr_ << ',' << samples
     << ',' << seed << '\n';
}

BallEstimate ball_volume(const VectorSystem& S, const Vec& x, double delta,
                         std::int64_t N, std::uint64_t seed,
                         const CCGraphParams& params, int threads) {
  if (N < 1) throw Error("ball_volume: need at least one sample");
  const int n = S.dim();
  Box box = mc_bounding_box(S, x, delta);
  CCGraph g = cc_flood(S, x, delta, box, params);

  double boxvol = 1.0;
  for (int d = 0; d < n; ++d) boxvol *= box.hi[d] - box.lo[d];

  std::vector<std::uint8_t> hit(static_cast<std::size_t>(N), 0);
  parallel_for(N, threads, [&](std::int64_t i) {
    Vec y(n);
    for (int d = 0; d < n; ++d) {
      double u = counter_uniform(seed, static_cast<std::uint64_t>(i) * n + d);
      y[d] = box.lo[d] + u * (box.hi[d] - box.lo[d]);
    }
    double dist = g.query(y);
    if (dist < 1e-3 * delta || dist < delta) hit[static_cast<std::size_t>(i)] = 1;
  });
  std::int64_t hits = 0;
  for (auto h : hit) hits += h;

  BallEstimate est;
  est.center = x;
  est.delta = delta;
  est.samples = N;
  est.seed = seed;
  est.bounding_box = box;
  double p = static_cast<double>(hits) / N;
  est.volume = p * boxvol;
  est.stderr_ = std::sqrt(p * (1.0 - p) / N) * boxvol;
  return est;
}

double doubling_ratio(const VectorSystem& S, const Vec& x, double delta,
                      std::int64_t N, std::uint64_t seed,
                      const CCGraphParams& params, int threads) {
  BallEstimate big = ball_volume(S, x, 2 * delta, N, seed, params, threads);
  BallEstimate small = ball_volume(S, x, delta, N, seed + 1, params, threads);
  if (small.volume <= 0) throw Error("doubling_ratio: degenerate denominator");
  return big.volume / small.volume;
}

ContainmentReport containment_check(
    const std::function<VectorSystem(double)>& family, const Vec& x,
    const std::vector<double>& deltas, double engulfing_C, int samples_per_pair,
    std::uint64_t seed, const CCGraphParams& params) {
  ContainmentReport rep;
  rep.engulfing_constant = engulfing_C;
  const int n = static_cast<int>(x.size());

  std::vector<double> sorted = deltas;
  std::sort(sorted.begin(), sorted.end());

  // distance fields B(x, delta) = B_{X^delta}(x, 1) for each delta
  std::vector<CCGraph> floods;
  std::vector<VectorSystem> systems;
  systems.reserve(sorted.size());
  for (double d : sorted) systems.push_back(family(d));
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    Box box = mc_bounding_box(systems[i], x, 1.0);
    floods.push_back(cc_flood(systems[i], x, 1.0, box, params));
  }

  // monotone containment: members of B(x, d1) are members of B(x, d2), d1<=d2
  std::uint64_t ctr = 0;
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    for (int s = 0; s < samples_per_pair; ++s) {
      // rejection-sample a point of the smaller ball from its bounding box
      const Box& b = floods[i].box();
      Vec y(n);
      bool found = false;
      for (int attempt = 0; attempt < 400 && !found; ++attempt) {
        for (int d = 0; d < n; ++d)
          y[d] = b.lo[d] +
                 counter_uniform(seed, ctr++) * (b.hi[d] - b.lo[d]);
        found = floods[i].query(y) < 1.0;
      }
      if (!found) continue;
      ++rep.pairs_checked;
      if (!(floods[i + 1].query(y) < 1.0 + 5e-3)) {
        ++rep.containment_violations;
        rep.violation_points.push_back(y);
      }
    }
  }

  // engulfing: B(x,d) and B(y,d) meet => B(y,d) subset of B(x, C d)
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    double d = sorted[i];
    if (engulfing_C * d > 1.0) continue;  // theorem range: delta <= 1/C
    VectorSystem big_sys = family(engulfing_C * d);
    Box big_box = mc_bounding_box(big_sys, x, 1.0);
    CCGraph big = cc_flood(big_sys, x, 1.0, big_box, params);
    // pick y on the rim of B(x, d): flood sample with dist ~ 0.9
    const Box& b = floods[i].box();
    for (int s = 0; s < samples_per_pair; ++s) {
      Vec y(n);
      bool found = false;
      for (int attempt = 0; attempt < 400 && !found; ++attempt) {
        for (int dd = 0; dd < n; ++dd)
          y[dd] = b.lo[dd] + counter_uniform(seed ^ 0xabcdef, ctr++) *
                                 (b.hi[dd] - b.lo[dd]);
        double q = floods[i].query(y);
        found = q > 0.5 && q < 1.0;  // B(x,d) and B(y,d) intersect via x-side
      }
      if (!found) continue;
      // sample z in B(y, d) and check z in B(x, C d)
      VectorSystem sys_d = systems[i];
      Box yb = mc_bounding_box(sys_d, y, 1.0);
      CCGraph fy = cc_flood(sys_d, y, 1.0, yb, params);
      for (int t = 0; t < 4; ++t) {
        Vec z(n);
        bool zfound = false;
        for (int attempt = 0; attempt < 200 && !zfound; ++attempt) {
          for (int dd = 0; dd < n; ++dd)
            z[dd] = yb.lo[dd] + counter_uniform(seed ^ 0x1234, ctr++) *
                                    (yb.hi[dd] - yb.lo[dd]);
          zfound = fy.query(z) < 1.0;
        }
        if (!zfound) continue;
        ++rep.engulfing_checked;
        if (!(big.query(z) < 1.0 + 5e-3)) {
          ++rep.engulfing_violations;
          rep.violation_points.push_back(z);
        }
      }
    }
  }
  return rep;
}

}  // namespace ccharts
