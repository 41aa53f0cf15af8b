#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace vsdf {

/// Run fn(i) for i in [0, n) on up to `threads` workers (0 = hardware count).
/// Work is split into contiguous chunks; every invocation writes only its own
/// slot in caller-owned storage, so results are bit-identical regardless of
/// the thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         int threads = 0) {
  unsigned t = threads > 0 ? unsigned(threads) : std::thread::hardware_concurrency();
  if (t < 1) t = 1;
  if (t == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  if (t > n) t = unsigned(n);
  std::vector<std::thread> pool;
  pool.reserve(t);
  std::size_t chunk = (n + t - 1) / t;
  for (unsigned w = 0; w < t; ++w) {
    std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace vsdf
