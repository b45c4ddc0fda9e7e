#pragma once

#include <exception>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace varint {

/// Worker threads used by parallel loops: VARINT_THREADS when set to a
/// positive integer, else the OpenMP default.
int thread_count();

/// Overrides the thread count for subsequent loops (0 restores the default).
void set_thread_count(int n);

/// Runs f(i) for i in [begin, end) with a static OpenMP schedule. If any
/// iterations throw, the exception of the smallest index is rethrown after
/// the loop, so error reporting does not depend on the thread count.
template <class F>
void parallel_for(int begin, int end, F&& f) {
    int first_bad = std::numeric_limits<int>::max();
    std::exception_ptr error;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_count())
#endif
    for (int i = begin; i < end; ++i) {
        try {
            f(i);
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical(varint_parallel_for_error)
#endif
            {
                if (i < first_bad) {
                    first_bad = i;
                    error = std::current_exception();
                }
            }
        }
    }
    if (error) std::rethrow_exception(error);
}

/// Serial counterpart of parallel_for, iterating in the given direction.
template <class F>
void serial_for(int begin, int end, bool reverse, F&& f) {
    if (!reverse) {
        for (int i = begin; i < end; ++i) f(i);
    } else {
        for (int i = end - 1; i >= begin; --i) f(i);
    }
}

}  // namespace varint
