// SPDX-License-Identifier: Apache-2.0

#ifndef TENSORCHART_PARALLEL_HPP
#define TENSORCHART_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace tensorchart {

// Number of worker threads: hardware concurrency, capped by the
// TENSORCHART_THREADS environment variable when set.
std::size_t worker_count();

// Runs fn(i) for i in [begin, end) on up to worker_count() threads using a
// static block partition. Results must be written to disjoint slots; any
// reduction is the caller's job so that summation order stays fixed.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)> &fn,
                  std::size_t min_per_thread = 1);

}  // namespace tensorchart

#endif
