#pragma once

#include <cstddef>
#include <functional>

namespace plab {

/// Worker count from PLAB_THREADS (default: hardware concurrency, at least 1).
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Work is split
/// into contiguous blocks; callers write results by index, so output never
/// depends on scheduling. The first exception thrown by any worker is
/// rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace plab
