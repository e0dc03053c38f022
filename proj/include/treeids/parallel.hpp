#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef TREEIDS_USE_OPENMP
#include <omp.h>
#endif

namespace treeids {

/// Number of workers used when a caller passes threads <= 0.
inline int default_thread_count() {
#ifdef TREEIDS_USE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline int resolve_threads(int threads) { return threads > 0 ? threads : default_thread_count(); }

/// Serial reference loop. Every parallel kernel must produce the same result as this.
template <class Body>
void serial_for(std::size_t n, Body&& body) {
    for (std::size_t i = 0; i < n; ++i) body(i);
}

/// Runs body(i) for i in [0, n) on up to `threads` OpenMP workers. Iterations must only
/// write to their own output slot; the first exception thrown by any iteration is
/// rethrown on the calling thread after the loop.
template <class Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
    threads = resolve_threads(threads);
#ifdef TREEIDS_USE_OPENMP
    if (threads > 1 && n > 1) {
        std::exception_ptr failure;
        std::mutex failure_mutex;
        const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
        for (long long i = 0; i < count; ++i) {
            try {
                body(static_cast<std::size_t>(i));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
        return;
    }
#endif
    serial_for(n, body);
}

} // namespace treeids
