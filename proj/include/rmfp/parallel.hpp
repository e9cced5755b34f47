#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace rmfp {

/// Number of worker threads used by data-parallel loops (>= 1).
std::size_t thread_count();

/// Resizes the shared pool. 0 selects MFP_THREADS from the environment, else 1.
void set_thread_count(std::size_t n);

/// Runs body(begin, end) over a static partition of [0, n). Every index is
/// visited exactly once and the partition depends only on n and the thread
/// count, so per-index outputs are reproducible. Loops shorter than
/// `min_parallel` run inline.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_parallel = 8);

/// Pairwise (tree) summation; the result is independent of thread count.
double tree_sum(std::span<const double> values);

}  // namespace rmfp
