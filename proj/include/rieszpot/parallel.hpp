#ifndef RIESZPOT_PARALLEL_HPP_
#define RIESZPOT_PARALLEL_HPP_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace rieszpot {

namespace detail {
inline std::atomic<unsigned>& thread_setting() {
    static std::atomic<unsigned> value{0};
    return value;
}
inline bool& inside_parallel_region() {
    thread_local bool flag = false;
    return flag;
}
} // namespace detail

/// Caps the number of worker threads; 0 means hardware concurrency.
inline void set_thread_count(unsigned n) { detail::thread_setting().store(n); }

inline unsigned thread_count() {
    unsigned n = detail::thread_setting().load();
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

/**
 * @brief Runs body(i) for every i in [0, n) over contiguous chunks.
 *
 * Each index is processed exactly once by exactly one thread and the body
 * must only write to storage owned by index i, so results do not depend on
 * the thread count. Nested calls run serially on the calling thread.
 */
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
    if (workers <= 1 || detail::inside_parallel_region()) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned t = 0; t < workers; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, t, begin, end] {
            detail::inside_parallel_region() = true;
            try {
                for (std::size_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
            detail::inside_parallel_region() = false;
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace rieszpot

#endif // RIESZPOT_PARALLEL_HPP_
