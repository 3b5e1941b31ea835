#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace mixlab {

inline unsigned default_workers() {
    const unsigned h = std::thread::hardware_concurrency();
    return h == 0 ? 1 : h;
}

// Static block partition of [begin,end) over `workers` threads. Each index is
// processed exactly once; callers keep determinism by writing results into
// per-index slots and reducing in index order afterwards.
inline void parallel_for(std::size_t begin, std::size_t end, unsigned workers,
                         const std::function<void(std::size_t)>& body) {
    const std::size_t count = end > begin ? end - begin : 0;
    if (count == 0) return;
    if (workers <= 1 || count == 1) {
        for (std::size_t i = begin; i < end; ++i) body(i);
        return;
    }
    const unsigned nthreads = static_cast<unsigned>(
        std::min<std::size_t>(workers, count));
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    const std::size_t chunk = (count + nthreads - 1) / nthreads;
    for (unsigned t = 0; t < nthreads; ++t) {
        const std::size_t lo = begin + static_cast<std::size_t>(t) * chunk;
        const std::size_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace mixlab
