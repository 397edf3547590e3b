// Worker-pool helper honoring the NBMMSE_THREADS cap.
#pragma once

#include <cstdint>
#include <functional>

namespace nbmmse {

// Number of workers: NBMMSE_THREADS when set and positive, otherwise the
// hardware concurrency (0 or unset means auto).
int worker_count();

// Runs fn(i) for i in [0, n); iterations must be independent.  Results are
// whatever fn writes at index i, so output order never depends on the number
// of workers.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace nbmmse
