#pragma once

#include <cstddef>
#include <functional>

namespace tailbound {

/// Worker count: hardware concurrency, capped by TAILBOUND_THREADS when set.
unsigned worker_count();

/// Runs body(begin, end) over contiguous chunks of [0, n).
///
/// Chunk boundaries depend only on n, so anything written per index is
/// independent of how many threads ran. Exceptions are rethrown on the
/// calling thread; when several chunks throw, the lowest chunk wins.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace tailbound
