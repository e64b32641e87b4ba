#ifndef MIM_PARALLEL_HPP
#define MIM_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace mim {

// Worker count: MIM_SIM_THREADS if set and positive, otherwise hardware
// concurrency.
std::size_t worker_count();

// Runs body(i) for i in [0, n). Indices are split into contiguous blocks, so
// results written by index are independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace mim

#endif
