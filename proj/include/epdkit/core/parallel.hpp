#pragma once

#include <cstddef>
#include <functional>

namespace epd {

// Worker count: hardware concurrency, capped by the EPDKIT_THREADS
// environment variable when it holds a positive integer.
std::size_t worker_count();

// Runs body(i) for i in [0, n) across worker_count() threads. Each index is
// processed exactly once; callers write results into per-index slots so the
// outcome does not depend on scheduling. The first exception thrown by any
// body is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace epd
