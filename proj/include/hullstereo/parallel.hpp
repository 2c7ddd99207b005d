#pragma once

#include <functional>

namespace hullstereo {

// Worker cap for all row-parallel loops. 0 = hardware concurrency.
// Resolution order: explicit set_thread_count, HULLSTEREO_THREADS, hardware.
void set_thread_count(int n);
int thread_count();

// Runs fn(begin, end) over contiguous chunks of [0, n). Output written by fn
// must go to disjoint slots so the result is identical for any thread count.
void parallel_chunks(int n, const std::function<void(int, int)>& fn);

// Per-index convenience built on parallel_chunks.
void parallel_for(int n, const std::function<void(int)>& fn);

} // namespace hullstereo
