#pragma once

#include <cstddef>
#include <functional>

namespace rvol {

// Worker count from RVOL_THREADS (default 1).
int thread_count();

// Calls body(i) for i in [0, count), split into contiguous chunks across
// thread_count() workers. body must only write to per-index state.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace rvol
