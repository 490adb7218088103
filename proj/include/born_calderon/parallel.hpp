#pragma once

#include <cstddef>
#include <functional>

namespace bc {

/// Worker count: BORN_CALDERON_THREADS if set to a positive integer, else the
/// hardware concurrency (at least 1).
int thread_count();

/// Calls body(i) for i in [0, n). Indices are dealt round-robin to a fixed
/// number of workers, so each result depends only on its index. The first
/// exception thrown (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int threads = 0);

} // namespace bc
