#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ctxsub {

/// Reference schedule: indices in order on the calling thread.
template <class Fn>
void for_each_index_serial(std::size_t n, Fn&& fn) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
}

/// OpenMP schedule over `workers` threads. The first exception (lowest index) is rethrown after
/// the loop so failures are reported the same way as in the serial schedule.
template <class Fn>
void for_each_index_parallel(std::size_t n, int workers, Fn&& fn) {
#ifdef _OPENMP
    if (workers <= 1 || n < 2) {
        for_each_index_serial(n, fn);
        return;
    }
    std::exception_ptr first_error;
    std::size_t first_index = n;
    std::mutex mu;
    const auto count = static_cast<long long>(n);
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
    for (long long i = 0; i < count; ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard lock(mu);
            if (static_cast<std::size_t>(i) < first_index) {
                first_index = static_cast<std::size_t>(i);
                first_error = std::current_exception();
            }
        }
    }
    if (first_error) std::rethrow_exception(first_error);
#else
    (void)workers;
    for_each_index_serial(n, fn);
#endif
}

}  // namespace ctxsub
