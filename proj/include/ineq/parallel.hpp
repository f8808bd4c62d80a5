#ifndef INEQ_PARALLEL_HPP
#define INEQ_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace ineq {

// Worker cap: INEQ_SAE_THREADS if set, else hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("INEQ_SAE_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (...) {
    }
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace detail {
inline thread_local bool in_parallel_region = false;
}

// Runs body(i) for i in [0, n). Each index writes only its own output slot,
// so results do not depend on scheduling. The first exception is rethrown.
// Calls nested inside a parallel region run serially.
template <typename F>
void parallel_for(int n, F&& body, int max_workers = 0) {
  if (n <= 0) return;
  int workers = max_workers > 0 ? max_workers : worker_count();
  workers = std::min(workers, n);
  if (workers <= 1 || detail::in_parallel_region) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run = [&] {
    const bool outer = detail::in_parallel_region;
    detail::in_parallel_region = true;
    struct Restore {
      bool v;
      ~Restore() { detail::in_parallel_region = v; }
    } restore{outer};
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int t = 0; t + 1 < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ineq

#endif
