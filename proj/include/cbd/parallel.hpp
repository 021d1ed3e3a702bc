#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace cbd {

/// Runs f(i) for i in [0, count) on up to `threads` workers. Callers write
/// results into index-addressed slots, so the output never depends on the
/// worker count. The exception from the lowest failing index is rethrown.
template <typename F>
void parallel_for(std::size_t count, unsigned threads, F&& f) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t i = next++; i < count && !failed; i = next++) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Worker count from CBD_THREADS, or 1 when unset or invalid.
unsigned threads_from_env();

}  // namespace cbd
