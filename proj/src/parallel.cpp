#include "socgen/parallel.hpp"

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace socgen {

unsigned thread_count() {
  if (const char* env = std::getenv("SOCGEN_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  return 1;
}

void parallel_chunks(std::size_t n, unsigned workers,
                     const std::function<void(std::size_t, std::size_t, unsigned)>& body) {
  if (workers <= 1 || n < 2 * workers) {
    body(0, n, 0);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(body, lo, hi, w);
  }
  for (auto& t : pool) t.join();
}

}  // namespace socgen
