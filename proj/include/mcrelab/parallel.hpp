// Replica-parallel helper. Work items write to disjoint slots, reductions
// happen sequentially afterwards, so results do not depend on thread count.
#pragma once

#include <cstdint>
#include <functional>

namespace mcrelab {

// Global worker cap used when a call site does not pass one explicitly.
int default_threads();
void set_default_threads(int n);

// Runs fn(i) for i in [0, n). fn must only touch state owned by item i.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn,
                  int threads = 0);

}  // namespace mcrelab
