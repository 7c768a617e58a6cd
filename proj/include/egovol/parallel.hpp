#pragma once

#include <cstddef>
#include <functional>

namespace egovol {

// requested <= 0 falls back to EGOVOL_THREADS, then hardware concurrency.
int resolve_threads(int requested);

// Static contiguous split of [0, n) across workers. Results must not depend
// on the split for any deterministic pipeline stage.
void parallel_blocks(std::size_t n, int threads,
                     const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace egovol
