#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace stucoco {

/// Paths are simulated in fixed-size chunks; each chunk owns a generator
/// seeded from (seed, stream, chunk index), so results do not depend on the
/// number of threads or on scheduling order.
inline constexpr std::size_t kPathsPerChunk = 256;

struct ChunkRng {
    std::mt19937_64 engine;
    boost::random::normal_distribution<double> normal;
    boost::random::uniform_01<double> uniform;

    ChunkRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t chunk) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                          static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32)};
        engine.seed(seq);
    }
    double gauss() { return normal(engine); }
    double unif() { return uniform(engine); }
};

inline std::size_t worker_count() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Calls fn(chunk, begin, end) for every chunk of [0, n). Exceptions thrown by
/// workers are rethrown on the caller's thread.
template <class Fn>
void for_each_chunk(std::size_t n, Fn&& fn, std::size_t chunk_size = kPathsPerChunk) {
    const std::size_t chunks = (n + chunk_size - 1) / chunk_size;
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t c = next++; c < chunks; c = next++) {
            try {
                fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = chunks;
            }
        }
    };
    const std::size_t threads = std::min(worker_count(), chunks);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace stucoco
