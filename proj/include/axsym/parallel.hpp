#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace axsym {

// Default worker count: AXSYM_WORKERS if set, else hardware concurrency.
int default_workers();

// Runs body(i) for i in [0, count) on up to `workers` threads. Work is handed
// out one index at a time; the first exception thrown by any body is rethrown
// on the calling thread after all workers have stopped.
template <typename Body>
void parallel_for(std::size_t count, int workers, Body&& body) {
    const std::size_t nthreads =
        std::min<std::size_t>(count, static_cast<std::size_t>(std::max(workers, 1)));
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(nthreads - 1);
    for (std::size_t k = 1; k < nthreads; ++k) pool.emplace_back(run);
    run();
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

} // namespace axsym
