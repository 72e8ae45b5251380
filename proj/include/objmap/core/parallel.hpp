// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace objmap {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Work is split into
// contiguous chunks so writes to disjoint per-index outputs stay
// deterministic regardless of scheduling.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  threads = std::max(1, threads);
  const std::size_t nthreads = std::min<std::size_t>(threads, n);
  if (nthreads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  const std::size_t chunk = (n + nthreads - 1) / nthreads;
  for (std::size_t t = 0; t < nthreads; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace objmap
