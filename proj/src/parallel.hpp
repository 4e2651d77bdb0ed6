#pragma once

#include <cstdint>
#include <exception>

namespace widthlab::detail {

// OpenMP loop that forwards the first exception thrown by any iteration.
template <class Body>
void parallel_for(std::int64_t n, bool parallel, Body&& body) {
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
#pragma omp critical(widthlab_parallel_for)
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
}

} // namespace widthlab::detail
