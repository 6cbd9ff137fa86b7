#pragma once

#include <cstddef>
#include <functional>

namespace geff {

// Max worker threads: min(hardware_concurrency, GEFF_THREADS env var if set).
int max_threads();

// Runs fn(begin, end) over disjoint chunks of [0, n), possibly on several
// threads. Each index is handled by exactly one worker writing disjoint
// outputs, so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace geff
