#pragma once

#include <cstddef>
#include <functional>

namespace conseg {

/// Worker cap from CONSEG_THREADS (0 or unset = hardware concurrency).
/// Throws ValidationError on a value that is not a non-negative integer.
unsigned worker_count();

/// Calls body(i) for every i in [0, n) across up to worker_count() threads.
/// Work is split into contiguous blocks; callers write results to slot i and
/// reduce afterwards in index order. The first exception thrown (lowest
/// block) is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace conseg
