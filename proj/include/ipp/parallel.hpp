#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ipp {

/// Worker count used by parallel_for. Defaults to hardware concurrency capped
/// by the IPP_MAX_JOBS environment variable.
unsigned max_jobs();
void set_max_jobs(unsigned jobs);

/// Runs fn(i) for i in [0, n). Each index is processed exactly once, so
/// results written to slot i do not depend on scheduling. The exception of the
/// lowest failing index is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const unsigned jobs = static_cast<unsigned>(std::min<std::size_t>(max_jobs(), n));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_index = n;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(jobs);
  for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace ipp
