#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace schtau::parallel {

inline int default_jobs() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs f(i) for i in [0, n) on up to `jobs` threads. Work items are handed
// out by an atomic counter; callers that care about ordering write results
// into slot i, so output is independent of scheduling.
template <class F>
void parallel_for(std::size_t n, int jobs, F&& f) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  const int workers = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(jobs), n));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        f(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace schtau::parallel
