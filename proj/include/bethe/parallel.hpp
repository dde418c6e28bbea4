#pragma once

#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace bethe {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, n).  fn must only write to slots owned by index i;
// results are then independent of the partitioning, which keeps every
// parallel stage bit-reproducible for any thread count.
template <typename Fn>
void parallel_for(std::int64_t n, int threads, Fn&& fn) {
    threads = resolve_threads(threads);
    if (threads <= 1 || n <= 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::int64_t per = (n + threads - 1) / threads;
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        const std::int64_t lo = t * per;
        const std::int64_t hi = std::min<std::int64_t>(n, lo + per);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi, t] {
            try {
                for (std::int64_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace bethe
