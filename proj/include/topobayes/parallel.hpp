#pragma once

#include <cstddef>
#include <functional>

namespace topobayes {

/// Worker count: TOPOBAYES_THREADS when set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
std::size_t default_thread_count();

/// Runs body(i) for i in [0, n) on up to `threads` threads. The first
/// exception thrown by any task is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

} // namespace topobayes
