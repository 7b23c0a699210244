#ifndef CCHARTS_CCMETRIC_HPP
#define CCHARTS_CCMETRIC_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <vector>

#include "ccharts/flows.hpp"

namespace ccharts {

struct CCGraphParams {
  int cells_per_axis = 0;   // 0: auto (by dimension)
  int n_dirs = 0;           // 0: auto (by field count)
  int seg_count = 160;      // local step = budget / seg_count
  int rk4_steps_per_seg = 2;
  double max_budget = 8.0;  // growth cap for cc_distance retries

  int auto_cells(int n) const;
  int auto_dirs(int q) const;
};

/// Shortest-path distance field of constant-control flow segments, flooded
/// from one center with Dijkstra over a spatial hash of cells.  Each segment
/// is a genuine sub-unit control path, so queried distances upper-bound the
/// CC distance up to integrator error and converge from above on refinement.
class CCGraph {
 public:
  struct Node {
    Vec position;
    double dist;
    int parent;        // index into nodes(); -1 for the seed
    double edge_len;   // sub-Riemannian length of the incoming segment
  };

  static constexpr double kUnreachable = std::numeric_limits<double>::infinity();

  /// Upper estimate of rho(center, y); +inf marker when y is not connectable.
  double query(const Vec& y) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  const Vec& center() const { return center_; }
  double budget() const { return budget_; }
  const Box& box() const { return box_; }
  const CCGraphParams& params() const { return params_; }

 private:
  friend CCGraph cc_flood(const VectorSystem& S, const Vec& x, double budget,
                          const Box& box, const CCGraphParams& params,
                          const CCGraph* warm_start);
  std::vector<Node> nodes_;
  std::vector<int> cell_node_;  // flat cell -> node index or -1
  Vec center_;
  Box box_;
  double budget_ = 0;
  CCGraphParams params_;
  int n_ = 0;
  std::vector<int> dims_, strides_;
  Vec cell_size_;
  const VectorSystem* system_ = nullptr;  // valid while the system outlives us

  int cell_of(const Vec& x) const;  // -1 when outside the box
};

/// Flood the reachable set of S from x with total control budget `budget`.
/// `warm_start` seeds the relaxation with an existing (coarser) graph's
/// nodes, which makes refinement monotone: every queried distance of the
/// refined graph is <= the coarse one.
CCGraph cc_flood(const VectorSystem& S, const Vec& x, double budget, const Box& box,
                 const CCGraphParams& params = {},
                 const CCGraph* warm_start = nullptr);

/// Upper estimate of the CC distance; +inf marker when unreachable within
/// params.max_budget.
double cc_distance(const VectorSystem& S, const Vec& x, const Vec& y,
                   const CCGraphParams& params = {});

bool ball_membership(const VectorSystem& S, const Vec& x, double delta, const Vec& y,
                     const CCGraphParams& params = {});

struct BallEstimate {
  Vec center;
  double delta = 0;
  double volume = 0;
  double stderr_ = 0;   // sqrt(p(1-p)/N) * boxvol
  std::int64_t samples = 0;
  Box bounding_box;
  std::uint64_t seed = 0;
  void write_csv_row(std::ostream& os) const;
  static void write_csv_header(std::ostream& os);
};

/// Per-axis Monte-Carlo bounding box x_i +- R_i, R_i = q * sup_box |X_j . e_i|
/// (3-pass fixed point, clipped to the domain).
Box mc_bounding_box(const VectorSystem& S, const Vec& x, double delta);

/// Monte-Carlo Lebesgue volume of B_X(x, delta).  Counter-based per-sample
/// randomness from (seed, index): deterministic under any thread count.
BallEstimate ball_volume(const VectorSystem& S, const Vec& x, double delta,
                         std::int64_t N, std::uint64_t seed,
                         const CCGraphParams& params = {}, int threads = 1);

double doubling_ratio(const VectorSystem& S, const Vec& x, double delta,
                      std::int64_t N, std::uint64_t seed,
                      const CCGraphParams& params = {}, int threads = 1);

struct ContainmentReport {
  int pairs_checked = 0;
  int containment_violations = 0;
  int engulfing_checked = 0;
  int engulfing_violations = 0;
  double engulfing_constant = 0;  // the C = B1^k used
  std::vector<Vec> violation_points;
};

/// Sampled monotone-containment and engulfing checks for a delta-family of
/// systems (instantiated by graded scaling in the scaling module).
ContainmentReport containment_check(
    const std::function<VectorSystem(double)>& family, const Vec& x,
    const std::vector<double>& deltas, double engulfing_C, int samples_per_pair,
    std::uint64_t seed, const CCGraphParams& params = {});

/// SplitMix64 counter-based stream: uniform in [0,1).
double counter_uniform(std::uint64_t seed, std::uint64_t index);

}  // namespace ccharts

#endif  // CCHARTS_CCMETRIC_HPP
