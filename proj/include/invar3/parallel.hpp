#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace invar3 {

// Number of worker threads: INVAR3_THREADS if set, else hardware concurrency.
unsigned worker_count();

// Runs fn(0..n-1) on worker threads; results keep index order.
template <class T> std::vector<T> parallel_map(std::size_t n, const std::function<T(std::size_t)>& fn)
{
    std::vector<std::optional<T>> slots(n);
    const std::size_t workers = std::min<std::size_t>(worker_count(), n);
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&](std::size_t w) {
        // static interleaved chunking keeps the assignment deterministic
        for (std::size_t i = w; i < n; i += workers) {
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                return;
            }
        }
    };
    if (workers <= 1) {
        if (n > 0)
            run(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back(run, w);
        for (auto& t : pool)
            t.join();
    }
    if (error)
        std::rethrow_exception(error);
    std::vector<T> out;
    out.reserve(n);
    for (auto& s : slots)
        out.push_back(std::move(*s));
    return out;
}

} // namespace invar3
