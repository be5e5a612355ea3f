#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace covplan {

inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

// Runs fn(i) for i in [0, n). Each index is processed exactly once by some
// worker; callers must make fn(i) write only to slot i so results do not
// depend on the worker count.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    workers = resolve_workers(workers);
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::size_t chunk = std::max<std::size_t>(1, n / (static_cast<std::size_t>(workers) * 8));
    auto body = [&] {
        for (;;) {
            std::size_t begin = next.fetch_add(chunk);
            if (begin >= n) return;
            std::size_t end = std::min(begin + chunk, n);
            for (std::size_t i = begin; i < end; ++i) fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers) - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
}

} // namespace covplan
