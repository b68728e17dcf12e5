#pragma once
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace gridlearn {

// Runs fn(block) for block in [0, num_blocks) on up to `workers` threads.
// Blocks are claimed dynamically, so callers must keep all mutable state
// private to a block; outputs then do not depend on scheduling order.
inline void parallel_blocks(int num_blocks, int workers,
                            const std::function<void(int)>& fn) {
    if (num_blocks <= 0) return;
    if (workers < 1) workers = 1;
    if (workers == 1 || num_blocks == 1) {
        for (int b = 0; b < num_blocks; ++b) fn(b);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            int b = next.fetch_add(1);
            if (b >= num_blocks) return;
            try {
                fn(b);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    int nthreads = std::min(workers, num_blocks);
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace gridlearn
