// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

namespace foldlab {

/// Worker count: FOLDLAB_THREADS if set and positive, else the hardware
/// concurrency (at least 1).
int thread_cap();

/// Runs fn(0) ... fn(n - 1) on up to `threads` workers. The first exception
/// is rethrown after all workers finish.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace foldlab
