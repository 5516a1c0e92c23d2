#pragma once

#include <cstddef>
#include <functional>

namespace hypar {

// Worker count used by parallel_for; 0 means hardware concurrency.
void set_threads(unsigned n);
unsigned threads();

// Runs fn(i) for i in [0, n) on at most threads() workers. Each index is
// visited exactly once, so writing to slot i keeps results deterministic.
// The first exception thrown by fn is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace hypar
