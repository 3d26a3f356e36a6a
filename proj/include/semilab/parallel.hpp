#pragma once

#include <cstddef>
#include <functional>

namespace semilab {

/// Worker count: SEMILAB_THREADS if set (>= 1), else hardware concurrency.
int thread_count();

/// Runs body(i) for i in [0, n) across thread_count() workers. Each index is
/// visited exactly once; callers write results to per-index slots so the
/// outcome does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &body);

} // namespace semilab
