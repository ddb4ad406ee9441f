#pragma once

#include <cstddef>
#include <functional>

namespace aslab {

/// Upper bound on worker threads. Initialised from ASLAB_THREADS when set,
/// otherwise from std::thread::hardware_concurrency().
std::size_t max_workers();
void set_max_workers(std::size_t n);

/// Runs body(i) for i in [0, n) on up to max_workers() threads.
///
/// Work is split by index; callers write results into per-index slots and
/// reduce them afterwards in ascending index order, which keeps every result
/// independent of the worker count. The first exception thrown by any body is
/// rethrown on the calling thread after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace aslab
