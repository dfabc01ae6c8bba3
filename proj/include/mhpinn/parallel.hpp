#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mhpinn::par {

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// How work is executed and reduced.
///  - parallel=false: plain sequential loop in item order (reference path).
///  - deterministic=true: fixed block partition, partial results folded in
///    block-index order, so sums are bit-identical for any thread count.
///  - deterministic=false: per-thread partials folded in thread order.
struct Execution {
    bool parallel = true;
    bool deterministic = true;

    static Execution serial() { return {false, true}; }
};

// Items per deterministic block. Fixed so the partition never depends on the
// thread count.
inline constexpr std::size_t kBlock = 32;

/// Blocked map-reduce over [0,n). `body(i, acc)` accumulates item i into a
/// double buffer `acc` of length width; buffers are folded into `out`
/// (length width, caller-initialized) in a reproducible order.
template <class Body>
void blocked_reduce(std::size_t n, std::size_t width, double* out, const Execution& ex,
                    Body&& body) {
    if (!ex.parallel) {
        for (std::size_t i = 0; i < n; ++i) body(i, out);
        return;
    }
    const std::size_t nblocks = (n + kBlock - 1) / kBlock;
    if (ex.deterministic) {
        // Process a bounded group of blocks at a time so scratch memory stays
        // proportional to the thread count, then fold in block order.
        const std::size_t group = std::max<std::size_t>(4 * max_threads(), 8);
        std::vector<std::vector<double>> scratch(group);
        for (std::size_t g0 = 0; g0 < nblocks; g0 += group) {
            const std::size_t gn = std::min(group, nblocks - g0);
#pragma omp parallel for schedule(dynamic)
            for (long bi = 0; bi < static_cast<long>(gn); ++bi) {
                auto& buf = scratch[bi];
                buf.assign(width, 0.0);
                const std::size_t b = g0 + bi;
                const std::size_t lo = b * kBlock, hi = std::min(n, lo + kBlock);
                for (std::size_t i = lo; i < hi; ++i) body(i, buf.data());
            }
            for (std::size_t bi = 0; bi < gn; ++bi)
                for (std::size_t k = 0; k < width; ++k) out[k] += scratch[bi][k];
        }
    } else {
        const int nt = max_threads();
        std::vector<std::vector<double>> scratch(nt);
#pragma omp parallel
        {
#ifdef _OPENMP
            const int tid = omp_get_thread_num();
#else
            const int tid = 0;
#endif
            auto& buf = scratch[tid];
            buf.assign(width, 0.0);
#pragma omp for schedule(static)
            for (long i = 0; i < static_cast<long>(n); ++i)
                body(static_cast<std::size_t>(i), buf.data());
        }
        for (int t = 0; t < nt; ++t)
            if (!scratch[t].empty())
                for (std::size_t k = 0; k < width; ++k) out[k] += scratch[t][k];
    }
}

/// Parallel loop over [0,n) with independent iterations (disjoint writes).
template <class Body>
void for_each(std::size_t n, const Execution& ex, Body&& body) {
    if (!ex.parallel) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(n); ++i) body(static_cast<std::size_t>(i));
}

}  // namespace mhpinn::par
