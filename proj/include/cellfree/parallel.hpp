#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace cellfree {

/// Worker count: CELLFREE_WORKERS env var, falling back to the hardware
/// concurrency.
inline int worker_count_from_env() {
  if (const char* env = std::getenv("CELLFREE_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs fn(0..n_tasks-1) on up to n_workers threads. Tasks must be
/// independent; callers keep determinism by writing results into
/// task-indexed slots.
inline void parallel_for(int n_tasks, int n_workers,
                         const std::function<void(int)>& fn) {
  if (n_tasks <= 0) return;
  n_workers = std::min(n_workers, n_tasks);
  if (n_workers <= 1) {
    for (int i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1))
        fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace cellfree
