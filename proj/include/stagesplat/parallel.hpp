#pragma once

#include <cstddef>
#include <functional>

namespace stagesplat {

/// Worker count: SPLAT_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();

/// Runs fn(i) for i in [0, n). Work is split dynamically; callers must write
/// to disjoint outputs so results do not depend on the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace stagesplat
