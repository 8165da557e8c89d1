#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace inrpet {

inline int hardware_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

/// Runs fn(begin, end) over a static partition of [0, n).
/// Results must not depend on the partition; callers that accumulate
/// floating-point sums should use parallel_blocks instead.
inline void parallel_for(std::int64_t n, int n_threads,
                         const std::function<void(std::int64_t, std::int64_t)>& fn) {
    if (n <= 0) return;
    n_threads = std::max(1, n_threads);
    if (n_threads == 1 || n < 2 * n_threads) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    const std::int64_t chunk = (n + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
        const std::int64_t b = t * chunk;
        const std::int64_t e = std::min(n, b + chunk);
        if (b >= e) break;
        workers.emplace_back(fn, b, e);
    }
    for (auto& w : workers) w.join();
}

/// Runs fn(block_index, begin, end) over fixed-size blocks of [0, n).
/// Block boundaries depend only on n and block_size, so per-block partial
/// results merged in block order are bit-identical for any thread count.
inline void parallel_blocks(std::int64_t n, std::int64_t block_size, int n_threads,
                            const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& fn) {
    if (n <= 0) return;
    block_size = std::max<std::int64_t>(1, block_size);
    const std::int64_t n_blocks = (n + block_size - 1) / block_size;
    parallel_for(n_blocks, n_threads, [&](std::int64_t bb, std::int64_t be) {
        for (std::int64_t blk = bb; blk < be; ++blk) {
            const std::int64_t lo = blk * block_size;
            const std::int64_t hi = std::min(n, lo + block_size);
            fn(blk, lo, hi);
        }
    });
}

}  // namespace inrpet
