#pragma once

#include <cstddef>
#include <functional>

namespace ggmac {

// Number of worker threads to use: `requested` if positive, otherwise the
// GGMAC_THREADS environment variable, otherwise the hardware thread count.
int resolve_threads(int requested = 0);

// Runs fn(i) for i in [0, count) across `threads` workers pulling indices from
// a shared counter. Work items must be independent; exceptions from workers are
// rethrown on the calling thread (first one wins). threads <= 1 runs inline.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                  int threads = 0);

}  // namespace ggmac
