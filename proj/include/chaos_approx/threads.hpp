#pragma once

#include <cstddef>
#include <functional>

namespace chaos {

// Worker count: min(hardware, CHAOS_APPROX_THREADS if set). At least 1.
int worker_count();

// Static block partition of [0, n); fn(begin, end) runs on each block.
// Blocks are disjoint, so callers get scheduling-independent results as long
// as each index writes only its own outputs.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace chaos
