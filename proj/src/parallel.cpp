#include "ipp/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace ipp {

namespace {

unsigned env_cap() {
  if (const char* v = std::getenv("IPP_MAX_JOBS")) {
    try {
      const long n = std::stol(v);
      if (n >= 1) return static_cast<unsigned>(n);
    } catch (...) {
    }
  }
  return 0;
}

std::atomic<unsigned>& configured() {
  static std::atomic<unsigned> jobs{0};
  return jobs;
}

}  // namespace

unsigned max_jobs() {
  unsigned jobs = configured().load();
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  if (const unsigned cap = env_cap(); cap > 0) jobs = std::min(jobs, cap);
  return jobs;
}

void set_max_jobs(unsigned jobs) { configured().store(jobs); }

}  // namespace ipp
