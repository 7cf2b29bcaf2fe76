#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace sdesym {

/// Worker count used when a caller passes threads <= 0. Starts at the hardware concurrency.
int default_threads();
void set_default_threads(int threads);

/// Splits [0, count) into `threads` contiguous chunks and runs body(begin, end, worker)
/// on each. The first exception thrown by any worker is rethrown after all joined.
/// Results must not depend on the chunking; callers write into per-index slots.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t, std::size_t, int)>& body);

/// Pairwise (cascade) sum in fixed order; identical for identical input.
double pairwise_sum(const double* v, std::size_t count);

}  // namespace sdesym
