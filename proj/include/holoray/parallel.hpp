#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace holoray {

/// Worker count: hardware concurrency capped by HOLONOMY_THREADS.
inline int thread_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("HOLONOMY_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

// Static block partition over [0, count). Each index is processed exactly once
// and writes only its own output slot, so results are deterministic regardless
// of the worker count.
inline void parallel_for(size_t count, const std::function<void(size_t)>& fn) {
  int workers = thread_count();
  if (workers == 1 || count < 2) {
    for (size_t idx = 0; idx < count; ++idx) fn(idx);
    return;
  }
  size_t chunk = (count + workers - 1) / workers;
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w) {
    size_t begin = w * chunk;
    size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([begin, end, &fn] {
      for (size_t idx = begin; idx < end; ++idx) fn(idx);
    });
  }
  for (auto& t : threads) t.join();
}

}  // namespace holoray
