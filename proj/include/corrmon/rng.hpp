#ifndef CORRMON_RNG_HPP
#define CORRMON_RNG_HPP

#include <cstdint>

namespace corrmon {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based uniform stream keyed by (seed, replication). Draw k of slot t
/// is a pure function of (seed, replication, t, k), so results do not depend on
/// the order in which replications or slots are evaluated.
class CounterRng {
public:
    static constexpr std::uint64_t kDrawsPerSlot = 5;

    constexpr CounterRng(std::uint64_t seed, std::uint64_t replication)
        : key_(mix64(mix64(seed) ^ mix64(replication * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL))) {}

    constexpr std::uint64_t bits(std::uint64_t slot, std::uint64_t draw) const {
        return mix64(key_ + (slot * kDrawsPerSlot + draw) * 0x9E3779B97F4A7C15ULL);
    }

    /// Uniform in [0, 1) with 53 random bits.
    constexpr double uniform(std::uint64_t slot, std::uint64_t draw) const {
        return static_cast<double>(bits(slot, draw) >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t key_;
};

} // namespace corrmon

#endif // CORRMON_RNG_HPP
