#pragma once

#include <cstddef>
#include <functional>

namespace slowssep {

/// Worker count: hardware concurrency, capped by SLOWSSEP_THREADS when set.
unsigned worker_threads();

/// Runs body(i) for i in [0, n). Each index is handled exactly once; callers
/// write results into per-index slots so the outcome is thread-count independent.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace slowssep
