#pragma once

#include <cstddef>
#include <functional>

namespace tmsim {

/// Worker count for internal data parallelism. Honors the TM_THREADS
/// environment variable; defaults to the hardware concurrency.
int thread_count();

/// Runs body(begin, end) over a static partition of [0, n). Chunk boundaries
/// depend only on n and the thread count, never on scheduling.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 1024);

}  // namespace tmsim
