#pragma once

#include <cstdint>

namespace goa {

/// Counter-based generator: the n-th draw of stream (seed, stream) is a pure
/// function of its arguments, so trials can run in any order on any thread.
/// Each draw is the SplitMix64 finaliser applied to a keyed counter.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix(seed ^ mix(stream + 0x632BE59BD9B4E019ULL))) {}

    std::uint64_t next() { return mix(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    std::uint64_t draws() const { return counter_; }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace goa
