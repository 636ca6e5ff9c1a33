#pragma once

#include <algorithm>
#include <functional>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace motjvie {

inline constexpr double c0 = 299792458.0;
inline constexpr double eps0 = 8.8541878128e-12;
inline constexpr double pi = 3.14159265358979323846;

// Invalid input or configuration. The command line maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Solver breakdown, non-convergence, blow-up. Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Worker count for parallel sections. Read once from MOTJVIE_THREADS,
// falling back to the hardware concurrency.
int thread_count();
void set_thread_count(int n);

// Static contiguous partition of [0, n) over the worker threads. The
// partition only depends on n and the thread count, so per-element results
// do not depend on scheduling.
template <class F>
void parallel_for(std::size_t n, F&& body) {
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1) {
    if (n > 0) body(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  body(std::size_t{0}, std::min(n, chunk));
  for (auto& t : pool) t.join();
}

// Same as parallel_for but hands out items one at a time, for loops whose
// per-item cost varies a lot.
void parallel_dynamic(std::size_t n, const std::function<void(std::size_t)>& body);

// Peak resident set size in bytes, 0 if unavailable.
std::size_t peak_rss_bytes();

}  // namespace motjvie
