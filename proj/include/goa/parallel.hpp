#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace goa {

inline constexpr const char* kThreadsEnv = "GOA_THREADS";

/// Worker count: explicit request, else $GOA_THREADS, else hardware concurrency.
inline int resolve_threads(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv(kThreadsEnv)) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(begin, end) on contiguous chunks of [0, n). Chunk boundaries depend
/// only on n and the thread count, and fn must write disjoint outputs, so the
/// result never depends on scheduling.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
    threads = std::clamp(threads, 1, std::max(1, n));
    if (threads == 1) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex m;
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int b = t * chunk, e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&, b, e] {
            try {
                fn(b, e);
            } catch (...) {
                std::lock_guard<std::mutex> lock(m);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace goa
