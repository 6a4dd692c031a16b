#ifndef AIRTEMP_CORE_PARALLEL_HPP
#define AIRTEMP_CORE_PARALLEL_HPP

#include <cstdint>
#include <functional>

namespace airtemp {

/// Worker count: AIRTEMP_THREADS when set (clamped to >= 1), otherwise the
/// hardware concurrency.
int worker_count();

/// Runs fn(begin, end) over a partition of [0, n). Each invocation owns its
/// index range exclusively, so results are identical for any worker count as
/// long as fn writes only to slots derived from its own indices.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn);

} // namespace airtemp

#endif
