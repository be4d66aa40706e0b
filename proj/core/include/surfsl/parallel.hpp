#pragma once

#include <cstddef>
#include <functional>

namespace surfsl {

/// Worker count: SLRUN_THREADS if set and positive, else the hardware concurrency.
unsigned worker_count();

/// Runs body(i) for i in [0, n). With parallel == false (or one worker) runs
/// in order on the calling thread. The first exception thrown by any body is
/// rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, bool parallel);

}  // namespace surfsl
