#pragma once

#include <cstdint>

namespace minimaxcdf {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based stream: draw j of stream s is mix64(key(s) + j * gamma), so
// any replicate can be generated without touching the others.
class CounterRng {
public:
    static constexpr std::uint64_t gamma = 0x9e3779b97f4a7c15ULL;

    explicit CounterRng(std::uint64_t stream) noexcept : key_(mix64(stream + gamma)) {}

    // Substream for replicate r of a run seeded with seed.
    static CounterRng substream(std::uint64_t seed, std::uint64_t r) noexcept { return CounterRng(seed ^ r); }

    std::uint64_t next_u64() noexcept { return mix64(key_ + (++ctr_) * gamma); }

    // Uniform on the open interval (0, 1): (m + 1/2) 2^-53 for a 53-bit m.
    double uniform() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    std::uint64_t counter() const noexcept { return ctr_; }

private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

} // namespace minimaxcdf
