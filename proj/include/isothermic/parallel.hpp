#ifndef ISOTHERMIC_PARALLEL_HPP
#define ISOTHERMIC_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace isothermic {

// Worker count: MPL_THREADS if set and positive, otherwise the hardware concurrency.
inline int worker_count() {
  if (const char* s = std::getenv("MPL_THREADS")) {
    try {
      const int n = std::stoi(s);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, n). The first exception is rethrown after all workers join.
template <class Fn>
void parallel_for(int n, Fn&& fn, int threads = 0) {
  if (n <= 0) return;
  const int t = std::min(n, threads > 0 ? threads : worker_count());
  if (t == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex m;
  auto work = [&] {
    for (int i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(m);
        if (!err) err = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int k = 0; k < t; ++k) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace isothermic

#endif
