#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace cseg {

// Resolves the worker count: explicit request > CSEG_THREADS env var > hardware.
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("CSEG_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(begin..end) split into contiguous ranges, one per worker.
// fn(range_begin, range_end) must not touch state shared with other ranges.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, int threads, Fn&& fn) {
    const std::size_t count = end > begin ? end - begin : 0;
    if (count == 0) return;
    const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), count);
    if (workers <= 1) {
        fn(begin, end);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = begin + w * chunk;
        const std::size_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& t : pool) t.join();
}

// Like parallel_for but over a fixed number of index chunks that is
// independent of the worker count. Chunk results can then be merged in chunk
// order, which keeps floating-point reductions bit-identical no matter how
// many threads executed them.
inline std::size_t fixed_chunk_count(std::size_t items, std::size_t max_chunks = 16) {
    return std::max<std::size_t>(1, std::min(items, max_chunks));
}

inline std::pair<std::size_t, std::size_t> fixed_chunk_range(std::size_t items, std::size_t chunks,
                                                            std::size_t chunk_index) {
    const std::size_t base = items / chunks;
    const std::size_t rem = items % chunks;
    const std::size_t lo = chunk_index * base + std::min(chunk_index, rem);
    const std::size_t hi = lo + base + (chunk_index < rem ? 1 : 0);
    return {lo, hi};
}

template <typename Fn>
void parallel_chunks(std::size_t items, int threads, std::size_t chunks, Fn&& fn) {
    parallel_for(0, chunks, threads, [&](std::size_t clo, std::size_t chi) {
        for (std::size_t c = clo; c < chi; ++c) {
            const auto [lo, hi] = fixed_chunk_range(items, chunks, c);
            if (lo < hi) fn(c, lo, hi);
        }
    });
}

}  // namespace cseg
