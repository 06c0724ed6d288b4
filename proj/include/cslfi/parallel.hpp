#pragma once

// Minimal index-parallel loop. Results go into caller-owned slots by index, so the
// output order never depends on scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace cslfi::parallel {

/// Calls body(i) for i in [0, n) on up to `workers` threads (0 = hardware concurrency).
/// The exception from the lowest failing index is rethrown after all workers stop.
inline void for_each_index(std::size_t n, const std::function<void(std::size_t)> &body, unsigned workers = 0) {
    if(n == 0) return;
    if(workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));

    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t>        next{0};
    auto                            run = [&] {
        for(std::size_t i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch(...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for(unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
        run();
    }
    for(auto &e : errors)
        if(e) std::rethrow_exception(e);
}

} // namespace cslfi::parallel
