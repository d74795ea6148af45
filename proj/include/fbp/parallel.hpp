#pragma once

#include <cstdint>
#include <functional>

namespace fbp {

/// Worker cap: set_thread_limit(n) wins, else FBP_THREADS env, else hardware
/// concurrency. 0 means auto.
void set_thread_limit(int n);
int thread_limit();

/// Static range split over worker threads. fn(begin, end) handles a chunk;
/// chunks are disjoint, so writes to per-index slots stay deterministic
/// regardless of the worker count.
void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn);

}  // namespace fbp
