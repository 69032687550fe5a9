#pragma once

#include <cstddef>
#include <functional>

namespace geomae {

// Worker cap from GEOMAE_THREADS, else the hardware concurrency (at least 1).
std::size_t worker_count();

// Calls fn(i) for i in [0, n), split into contiguous blocks across workers.
// fn must only write to per-index state; callers reduce afterwards in index
// order so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace geomae
