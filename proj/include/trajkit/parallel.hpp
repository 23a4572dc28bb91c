#pragma once

#include <cstddef>
#include <functional>

namespace trajkit {

/// Worker count: TRAJKIT_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();

/// Calls fn(i) for i in [0, n) across up to thread_count() threads. Results
/// must not depend on scheduling: each index owns its outputs and RNG keys.
/// The first exception thrown by any call is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t threads = 0);

}  // namespace trajkit
