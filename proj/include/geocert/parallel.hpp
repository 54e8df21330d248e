#pragma once

#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace geocert {

// Worker count: GEOCERT_THREADS if set (clamped to >= 1), else the hardware
// concurrency. Single-threaded fallback keeps results bit-identical, so the
// loop body must not depend on execution order in any case.
inline int worker_count() {
  if (const char* env = std::getenv("GEOCERT_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Run body(t) for t in [0, count) across worker threads, in blocks. The
// first exception thrown by any body is rethrown on the calling thread.
// workers <= 0 means "use worker_count()".
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                         int workers_override = 0) {
  const int workers = workers_override > 0 ? workers_override : worker_count();
  if (workers <= 1 || count <= 1) {
    for (std::size_t t = 0; t < count; ++t) body(t);
    return;
  }
  std::vector<std::thread> pool;
  std::mutex err_mutex;
  std::exception_ptr first_error;
  const std::size_t n = static_cast<std::size_t>(workers) < count
                            ? static_cast<std::size_t>(workers)
                            : count;
  for (std::size_t w = 0; w < n; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t t = w; t < count; t += n) body(t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace geocert
