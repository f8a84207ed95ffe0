#ifndef SURVEYFUSE_PARALLEL_HPP
#define SURVEYFUSE_PARALLEL_HPP

#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace surveyfuse {

// Runs fn(i) for i in [0, n) over a small worker pool. Results must be
// written by index so the output order is independent of scheduling.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = std::min(threads, n);
  std::vector<std::thread> pool;
  std::mutex mu;
  std::exception_ptr first_error;
  std::vector<int> next{0};
  auto worker = [&]() {
    for (;;) {
      int i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (first_error || next[0] >= n) return;
        i = next[0]++;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace surveyfuse

#endif
