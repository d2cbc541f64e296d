#pragma once

#include <cstddef>
#include <functional>

namespace socgen {

/// Worker count from SOCGEN_THREADS, at least 1.
unsigned thread_count();

/// Runs body(chunk_begin, chunk_end, worker) over [0, n) split into contiguous
/// chunks, one per worker. Callers reduce per-worker results in worker order.
void parallel_chunks(std::size_t n, unsigned workers,
                     const std::function<void(std::size_t, std::size_t, unsigned)>& body);

}  // namespace socgen
