#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace easde::detail {

//! Worker count: EASDE_THREADS when set (>= 1), else hardware concurrency.
inline unsigned worker_count()
{
    static unsigned n = [] {
        if (const char* env = std::getenv("EASDE_THREADS")) {
            long v = std::strtol(env, nullptr, 10);
            if (v >= 1)
                return static_cast<unsigned>(std::min(v, 256L));
        }
        unsigned hc = std::thread::hardware_concurrency();
        return hc == 0 ? 1u : hc;
    }();
    return n;
}

//! Runs fn(begin, end) over a partition of [0, n). Each call owns disjoint
//! output slots, so results are identical for every worker count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn)
{
    std::size_t workers = worker_count();
    if (workers <= 1 || n < 2048) {
        fn(static_cast<std::size_t>(0), n);
        return;
    }
    workers = std::min(workers, n);
    std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> threads;
    threads.reserve(workers - 1);
    std::exception_ptr err;
    std::mutex err_mutex;
    auto guarded = [&](std::size_t b, std::size_t e) {
        try {
            fn(b, e);
        } catch (...) {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (!err)
                err = std::current_exception();
        }
    };
    for (std::size_t w = 1; w < workers; ++w) {
        std::size_t b = w * chunk;
        std::size_t e = std::min(n, b + chunk);
        if (b >= e)
            break;
        threads.emplace_back([&guarded, b, e] { guarded(b, e); });
    }
    guarded(static_cast<std::size_t>(0), std::min(chunk, n));
    for (auto& t : threads)
        t.join();
    if (err)
        std::rethrow_exception(err);
}

} // namespace easde::detail
