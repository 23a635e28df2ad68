#pragma once

#include <cstddef>
#include <functional>

namespace granular {

/// Runs body(begin, end) over contiguous chunks of [0, n) on up to `threads`
/// workers. Chunks write disjoint outputs, so results never depend on the
/// thread count. threads <= 1 runs inline.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

/// Thread count from the GRANULAR_THREADS environment variable, else 1.
int default_thread_count();

}  // namespace granular
