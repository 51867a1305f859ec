#pragma once

#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace corsense {

// Index-parallel loop with a deterministic work split: item i goes to worker
// i % jobs.  Each body call must only touch its own output slot; combined
// with seed-per-index randomness and pairwise aggregation this makes every
// result independent of the job count.  The first exception thrown by a body
// is rethrown on the calling thread.
inline void parallel_for(long n, int jobs, const std::function<void(long)>& body) {
  if (n < 0) throw std::invalid_argument("parallel_for: negative count");
  if (jobs <= 1 || n <= 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  const int workers = static_cast<int>(std::min<long>(jobs, n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  std::mutex err_mutex;
  std::exception_ptr err;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (long i = t; i < n; i += workers) {
          {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (err) return;
          }
          body(i);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace corsense
