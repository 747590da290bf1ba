#pragma once

#include <cstddef>
#include <functional>

namespace mobkit {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Work is split by
/// index, results must be written to preallocated slots, so the outcome is
/// identical for any thread count. threads <= 1 runs inline.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

} // namespace mobkit
