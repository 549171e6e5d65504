#pragma once

#include <cstddef>
#include <functional>

namespace transit_access {

// Worker count: TRANSIT_ACCESS_THREADS if set and positive, otherwise the
// hardware concurrency.
unsigned worker_count();

// Runs body(i) for i in [0, n) on up to worker_count() threads. Items are
// claimed dynamically, so body must only write to per-item state. The first
// exception thrown by any item is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace transit_access
