#include "malab/common.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace malab {

namespace {
std::atomic<int> g_threads{1};
std::atomic<std::uint64_t> g_memory_cap{1ull << 30}; // 1 GiB default

constexpr std::size_t kChunk = 1 << 14;
} // namespace

void set_threads(int k) {
    if (k < 1) fail(ErrCode::invalid_argument, "thread count must be >= 1");
    g_threads.store(k);
}

int threads() { return g_threads.load(); }

void set_memory_cap(std::uint64_t bytes) { g_memory_cap.store(bytes); }

std::uint64_t memory_cap() { return g_memory_cap.load(); }

void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body) {
    const int nthreads = threads();
    if (nthreads == 1 || count <= kChunk) {
        body(0, count);
        return;
    }
    // Chunk boundaries are fixed by kChunk, not by the thread count, so any
    // per-chunk work gives identical results regardless of scheduling.
    const std::size_t nchunks = (count + kChunk - 1) / kChunk;
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= nchunks) return;
            const std::size_t lo = c * kChunk;
            const std::size_t hi = std::min(count, lo + kChunk);
            body(lo, hi);
        }
    };
    std::vector<std::thread> pool;
    const int spawn = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(nthreads), nchunks));
    pool.reserve(static_cast<std::size_t>(spawn));
    for (int t = 1; t < spawn; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

double kahan_sum(const double* v, std::size_t count) {
    double sum = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double y = v[i] - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

double kahan_mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return kahan_sum(v.data(), v.size()) / static_cast<double>(v.size());
}

} // namespace malab
