#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace topogs {

// Process-wide worker count used by parallel_for. Defaults to the
// TOPOGS_THREADS environment variable, else hardware concurrency.
int num_threads();
void set_num_threads(int n);

// Runs fn(i) for i in [0, n) on static contiguous chunks. Callers write
// into per-index slots only, so results never depend on the thread count.
template <typename Fn>
void parallel_for(std::ptrdiff_t n, Fn&& fn) {
  if (n <= 0) return;
  const std::ptrdiff_t workers = std::min<std::ptrdiff_t>(num_threads(), n);
  if (workers <= 1 || n < 64) {
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  pool.reserve(static_cast<std::size_t>(workers));
  const std::ptrdiff_t chunk = (n + workers - 1) / workers;
  for (std::ptrdiff_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::ptrdiff_t end = std::min(n, (w + 1) * chunk);
        for (std::ptrdiff_t i = w * chunk; i < end; ++i) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace topogs
