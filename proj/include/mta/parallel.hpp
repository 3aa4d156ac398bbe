#pragma once

#include <cstddef>
#include <functional>

namespace mta {

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Work items are
/// independent; callers write results into pre-sized slots so output order
/// never depends on scheduling. The first exception thrown is rethrown.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

/// `--jobs` fallback: MTA_THREADS if set to a positive integer, else 1.
int default_jobs();

}  // namespace mta
