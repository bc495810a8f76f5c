#pragma once

#include <thread>
#include <vector>

#include "plr/errors.hpp"

namespace plr {

// Static range split across num_threads workers. Each worker owns a disjoint
// contiguous [lo, hi) slice, so as long as `fn(i)` writes only to row i the
// result is bit-identical for any thread count.
template <typename Fn>
void parallel_for(int n, int num_threads, Fn&& fn) {
    if (num_threads < 1) throw PreconditionError("parallel_for: num_threads must be >= 1");
    if (n <= 0) return;
    if (num_threads == 1 || n == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    const int workers = std::min(num_threads, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int lo = w * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (int i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace plr
