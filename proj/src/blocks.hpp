#pragma once

#include <vector>

#include "parallel.hpp"
#include "widthlab/estimators.hpp"

namespace widthlab::detail {

// Runs fn(block, count) for every fixed-size sample block and returns the
// per-block results in block order.
template <class R, class Fn>
std::vector<R> map_blocks(long long n_samples, Exec exec, Fn&& fn) {
    const long long nb = (n_samples + kSamplesPerBlock - 1) / kSamplesPerBlock;
    std::vector<R> out(nb);
    parallel_for(nb, exec == Exec::parallel, [&](std::int64_t b) {
        const long long count = std::min(kSamplesPerBlock, n_samples - b * kSamplesPerBlock);
        out[b] = fn(b, count);
    });
    return out;
}

} // namespace widthlab::detail
