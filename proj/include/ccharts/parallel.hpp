#ifndef CCHARTS_PARALLEL_HPP
#define CCHARTS_PARALLEL_HPP

#include <cstdint>
#include <thread>
#include <vector>

namespace ccharts {

/// Index-chunked parallel loop.  Results must be written to per-index slots
/// by `fn` so the outcome is identical for every thread count.
template <class Fn>
void parallel_for(std::int64_t count, int threads, const Fn& fn) {
  if (threads <= 1 || count < 2) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  int t = std::min<std::int64_t>(threads, count);
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (int w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      for (std::int64_t i = w; i < count; i += t) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace ccharts

#endif  // CCHARTS_PARALLEL_HPP
