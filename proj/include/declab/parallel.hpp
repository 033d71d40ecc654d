#pragma once

#include <cstddef>
#include <functional>

namespace declab {

/// Worker count resolution: explicit request, else DECOUPLING_LAB_WORKERS,
/// else hardware concurrency. Always at least 1.
int resolve_workers(int requested = 0);

/// Runs fn(i) for i in [0, count) on a fixed-size worker pool.
///
/// Items are independent; callers that reduce results must store per-index
/// outputs and fold them in index order so the reduction is deterministic
/// regardless of the worker count.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

} // namespace declab
