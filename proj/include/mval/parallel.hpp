#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace mval {

// Thread cap from MVAL_THREADS (0 or unset = hardware concurrency).
inline unsigned thread_limit() {
    if (const char* env = std::getenv("MVAL_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Index-keyed parallel loop. Work items must write only to their own slot so
// results are identical regardless of the thread count.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const unsigned threads = std::min<std::size_t>(thread_limit(), count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t]() {
            for (std::size_t i = t; i < count; i += threads) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace mval
