#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace crumbs {

// Worker cap: CRUMBS_THREADS if set, else hardware concurrency.
inline unsigned max_threads() {
    if (const char* env = std::getenv("CRUMBS_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Static strided partition; fn(i) runs once per index, writers must target
// disjoint slots. Deterministic results regardless of thread count.
inline void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
    unsigned workers = std::min<size_t>(max_threads(), n);
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
        threads.emplace_back([&, w] {
            for (size_t i = w; i < n; i += workers) fn(i);
        });
    for (auto& t : threads) t.join();
}

} // namespace crumbs
