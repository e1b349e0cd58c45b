#ifndef MALAB_PRNG_HPP
#define MALAB_PRNG_HPP

#include <cstdint>

namespace malab {

// Counter-based generator (SplitMix64 finalizer applied to seed + k*golden).
// Stateless: output i of stream `seed` is mix64(seed + (i+1)*GOLDEN), which
// makes draws reproducible across platforms and independent of threading.
// The algorithm is written out here and in the README so other tools can
// regenerate identical test corpora.
struct CounterRng {
    std::uint64_t seed = 0;
    std::uint64_t counter = 0;

    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

    static std::uint64_t mix64(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t next_u64() {
        ++counter;
        return mix64(seed + counter * kGolden);
    }

    /// Uniform in [0,1) with 53 random bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi] (small ranges only; modulo bias < 2^-50).
    std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo + 1);
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }
};

} // namespace malab

#endif
