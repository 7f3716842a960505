#pragma once

#include <cstddef>
#include <functional>

namespace fluororeg {

/// Worker count: FLUOROREG_THREADS when set (>= 1), else hardware concurrency.
int worker_count();

/// Runs body(i) for i in [0, n), split into contiguous chunks across at most
/// worker_count() threads. Runs inline when one worker suffices. The first
/// exception thrown by any chunk is rethrown after all chunks finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fluororeg
