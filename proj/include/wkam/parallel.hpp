#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace wkam {

// Process-wide worker count for data-parallel loops. 0 means "all cores".
// Set once from the CLI --threads flag; reads are benign races on an int.
int parallel_threads() noexcept;
void set_parallel_threads(int n) noexcept;

// Runs fn(begin, end) on contiguous index chunks, one chunk per worker.
// Each chunk writes disjoint outputs, so results do not depend on the
// worker count or scheduling. The first worker exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    std::size_t workers = static_cast<std::size_t>(parallel_threads());
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n == 0 ? std::size_t{1} : n);
    if (workers <= 1 || n < 2) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, &errors, w, lo, hi] {
            try {
                fn(lo, hi);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace wkam
