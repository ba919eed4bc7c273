#pragma once

// Index-parallel loops. Work is handed out by an atomic counter and results are
// written by index, so the output never depends on the number of workers.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace psilab {

/// Worker count: PSILAB_THREADS if set, else hardware concurrency (at least 1).
std::size_t worker_count();

/// Calls body(i) for i in [0, count). The exception thrown for the smallest
/// index (if any) is rethrown after all workers finish.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
    const std::size_t workers = std::min(worker_count(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr err;
    std::size_t err_index = count;
    auto run = [&]() {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(err_mutex);
                if (i < err_index) {
                    err_index = i;
                    err = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

/// parallel_for that collects body(i) into a vector indexed by i.
template <class T, class Body>
std::vector<T> parallel_map(std::size_t count, Body&& body) {
    std::vector<T> out(count);
    parallel_for(count, [&](std::size_t i) { out[i] = body(i); });
    return out;
}

}  // namespace psilab
