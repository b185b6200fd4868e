#pragma once

#include <cstddef>
#include <functional>

namespace ppls {

/// Number of workers to use: `requested` if positive, otherwise the hardware
/// concurrency (at least one).
unsigned resolve_threads(int requested);

/// Calls body(i) for i in [0, count) on up to `threads` workers. Each index
/// runs exactly once; the first exception thrown by any body is rethrown
/// after all workers finish.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace ppls
