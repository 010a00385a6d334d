#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace sfrf {

// Runs fn(i) for i in [0, n), split into contiguous blocks across threads.
// fn must be safe to call concurrently for distinct i; writers should target
// per-index slots so results cannot depend on scheduling.
template <typename Fn>
void parallel_for(int n, int num_threads, Fn&& fn) {
    if (n <= 0) return;
    int workers = std::min(num_threads, n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        int begin = static_cast<int>(static_cast<long long>(n) * w / workers);
        int end = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
        pool.emplace_back([begin, end, &fn] {
            for (int i = begin; i < end; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace sfrf
