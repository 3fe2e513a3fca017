#pragma once

#include <cstddef>
#include <functional>

namespace pairgrpo::cli {

/// Calls task(i) for i in [0, n) on up to `jobs` threads. Tasks must write
/// only to their own slot. The first exception by task index is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task);

}  // namespace pairgrpo::cli
