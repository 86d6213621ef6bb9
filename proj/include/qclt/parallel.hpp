#ifndef QCLT_PARALLEL_HPP
#define QCLT_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qclt {

/// Worker count used by replicate loops. 1 runs inline.
inline std::atomic<unsigned> &default_threads() {
  static std::atomic<unsigned> threads{1};
  return threads;
}

/// Calls body(i) for i in [0, count). Each index is processed exactly once;
/// callers write results into per-index slots, so output never depends on
/// scheduling.
template <class Body> void parallel_for(std::size_t count, Body &&body) {
  const unsigned workers =
      std::min<std::size_t>(std::max(1u, default_threads().load()), std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      body(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) {
              failure = std::current_exception();
            }
          }
        }
      });
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

} // namespace qclt

#endif // QCLT_PARALLEL_HPP
