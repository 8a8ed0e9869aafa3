#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace fif {

/// Deterministic parallel map over [0, n): each worker owns a contiguous
/// block, `body(begin, end)` must only write its own block.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
    if (threads <= 1 || n < 4096) {
        body(std::size_t{0}, n);
        return;
    }
    const std::size_t t = static_cast<std::size_t>(threads);
    std::vector<std::thread> pool;
    pool.reserve(t);
    const std::size_t chunk = (n + t - 1) / t;
    for (std::size_t w = 0; w < t; ++w) {
        const std::size_t lo = w * chunk;
        if (lo >= n) break;
        const std::size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

} // namespace fif
