#pragma once

#include <cstddef>
#include <functional>

namespace ridgenet {

/// Worker count: RIDGENET_THREADS if set and positive, else hardware concurrency.
unsigned thread_count();

/// Runs fn(i) for i in [0, n) on contiguous static blocks. Each index must
/// write only its own output slot, so results do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace ridgenet
