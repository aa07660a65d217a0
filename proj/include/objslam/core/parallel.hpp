#pragma once

#include <functional>

namespace objslam {

// Number of kernel worker threads: hardware concurrency capped by the
// OBJSLAM_THREADS environment variable.
int worker_count();

// Splits [begin, end) into fixed-size chunks and runs fn(chunk_begin,
// chunk_end) for each, possibly on worker threads. The chunk partition does
// not depend on the worker count, so per-chunk accumulators combined in chunk
// order give results independent of threading.
void parallel_chunks(int begin, int end, int grain,
                     const std::function<void(int, int)>& fn);

// Convenience wrapper: fn(i) for each i in [begin, end), row-level grain.
void parallel_for(int begin, int end, const std::function<void(int)>& fn);

}  // namespace objslam
