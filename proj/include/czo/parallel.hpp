#pragma once

#include <cstddef>
#include <functional>

namespace czo {

/// Worker count used by every parallel loop in the library. Defaults to the
/// CZO_THREADS environment variable, else the hardware concurrency.
std::size_t thread_count();
void set_thread_count(std::size_t threads);

/// Runs body(begin, end) over contiguous chunks of [0, count). Chunk
/// boundaries depend only on `count` and `grain`, never on the worker count,
/// so per-chunk results are reproducible regardless of threading.
void parallel_chunks(std::size_t count, std::size_t grain,
                     const std::function<void(std::size_t, std::size_t)>& body);

/// Element-wise convenience over parallel_chunks.
template <class F>
void parallel_for(std::size_t count, F&& f, std::size_t grain = 64) {
  parallel_chunks(count, grain, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) f(i);
  });
}

}  // namespace czo
