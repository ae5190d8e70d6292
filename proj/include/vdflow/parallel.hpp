#pragma once
#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace vdflow {

namespace detail {
inline std::atomic<int>& thread_count_ref() {
  static std::atomic<int> count{1};
  return count;
}
}  // namespace detail

inline void set_thread_count(int n) { detail::thread_count_ref() = std::max(1, n); }
inline int thread_count() { return detail::thread_count_ref(); }

// Runs body(i) for i in [0, count). Iterations must be independent; each index is
// handled by exactly one worker, so results do not depend on the thread count.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), count / 256 + 1);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  auto run = [&](std::size_t w) {
    try {
      const std::size_t lo = w * chunk, hi = std::min(count, lo + chunk);
      for (std::size_t i = lo; i < hi; ++i) body(i);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run, w);
    run(0);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace vdflow
