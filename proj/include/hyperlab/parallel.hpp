#pragma once

// Static-chunk parallel loop. Each index writes its own slot, so results do not depend on the worker count.

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hyperlab {

// HYPERLAB_WORKERS overrides the hardware concurrency; 1 runs inline.
inline unsigned workers() {
    if (const char* env = std::getenv("HYPERLAB_WORKERS")) {
        const int n = std::atoi(env);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned nworkers = workers()) {
    if (n == 0) return;
    nworkers = static_cast<unsigned>(std::min<std::size_t>(nworkers, n));
    if (nworkers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + nworkers - 1) / nworkers;
    for (unsigned w = 0; w < nworkers; ++w) {
        const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace hyperlab
