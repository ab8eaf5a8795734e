#pragma once

#include <cstddef>
#include <functional>

namespace hamball {

// Worker count: HAMBALL_THREADS if set (>= 1), otherwise hardware concurrency.
std::size_t thread_budget();

// Calls fn(i) for i in [0, n) across up to thread_budget() threads. Each index
// is visited exactly once; callers write to per-index slots and reduce in order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace hamball
