#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace jadce {

// Worker count: JADCE_THREADS if set, otherwise every available core.
inline int thread_count() {
  if (const char* env = std::getenv("JADCE_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(i) for i in [0, n). Each index must touch only its own output slot;
// results are then identical to the serial loop regardless of worker count.
inline void parallel_for(long n, const std::function<void(long)>& fn) {
  const int workers = thread_count();
  if (workers <= 1 || n <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const int used = static_cast<int>(std::min<long>(workers, n));
  pool.reserve(static_cast<size_t>(used));
  for (int w = 0; w < used; ++w) {
    pool.emplace_back([&, w] {
      for (long i = w; i < n; i += used) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace jadce
