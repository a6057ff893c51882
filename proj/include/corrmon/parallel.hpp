#ifndef CORRMON_PARALLEL_HPP
#define CORRMON_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace corrmon {

/// Worker count: CORRMON_THREADS if set to a positive integer, otherwise the
/// hardware concurrency.
inline unsigned default_parallelism() {
    if (const char* env = std::getenv("CORRMON_THREADS")) {
        try {
            const long n = std::stol(env);
            if (n > 0) return static_cast<unsigned>(n);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n). Each index is written by exactly one worker,
/// so callers that store into a pre-sized vector get schedule-independent output.
/// The first exception thrown by any task is rethrown.
template <class Body>
void parallel_for(std::size_t n, Body&& body, unsigned workers = default_parallelism()) {
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto run = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace corrmon

#endif // CORRMON_PARALLEL_HPP
