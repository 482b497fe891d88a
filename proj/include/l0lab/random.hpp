#pragma once

#include <cstdint>

namespace l0lab {

namespace detail {

/// SplitMix64 finalizer; full-avalanche 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

/// Combine a seed with an index into a new 64-bit seed. Used for the
/// (master_seed, cell) -> cell_seed and (cell_seed, trial) -> stream chain.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return detail::mix64(detail::mix64(seed) ^ (index * 0xda942042e4dd58b5ULL + 0x8bb84b93962eacc9ULL));
}

/// Deterministic counter-based random stream. Identical (master_seed,
/// stream_id) pairs produce identical sequences on every platform and under
/// any degree of parallelism; all state is a single 64-bit counter seed.
class RandomStream {
public:
    RandomStream(std::uint64_t master_seed, std::uint64_t stream_id)
        : state_(derive_seed(master_seed, stream_id)) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform draw in the open interval (0, 1).
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Fair coin as a {-1, +1} label.
    int next_sign() { return (next_u64() & 1u) ? 1 : -1; }

private:
    std::uint64_t state_;
};

inline RandomStream derive_stream(std::uint64_t master_seed, std::uint64_t stream_id) {
    return RandomStream(master_seed, stream_id);
}

} // namespace l0lab
