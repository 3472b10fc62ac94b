#pragma once
// Deterministic fork-join loop: index i always computes the same work item
// regardless of thread count, results land in caller-owned slots.

#include <thread>
#include <vector>

namespace cellflow {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
    if (n <= 0) return;
    threads = resolve_threads(threads);
    if (threads > n) threads = n;
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&fn, t, n, threads]() {
            for (int i = t; i < n; i += threads) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace cellflow
