#pragma once

#include <cstddef>
#include <functional>

namespace htail {

/// Worker count: explicit request if positive, else HTAIL_THREADS, else the
/// hardware concurrency (at least 1).
int resolve_workers(int requested = 0);

/// Run body(i) for i in [0, n) on up to `workers` threads. Items are handed
/// out in index order; each item must write only its own output slot, which
/// keeps results independent of the worker count. The first exception thrown
/// by any item is rethrown after all threads join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int workers = 0);

}  // namespace htail
