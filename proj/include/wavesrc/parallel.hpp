#pragma once

#include <cstddef>
#include <functional>

namespace wavesrc {

// Worker count used by parallel_for when no explicit count is given.
// Initialised from WAVESRC_THREADS, falling back to the machine parallelism.
unsigned thread_count();
void set_thread_count(unsigned n);  // 0 restores the machine default

// Splits [0, n) into contiguous chunks, one per worker, and calls
// body(begin, end) for each. Chunk boundaries depend only on n and the worker
// count, so results are deterministic whenever body writes disjoint outputs.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  unsigned workers = 0);

}  // namespace wavesrc
