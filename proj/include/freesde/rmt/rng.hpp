#pragma once

#include <cstdint>
#include <limits>

namespace freesde::rmt {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based generator: the stream is fixed by (seed, path, step), so any
/// increment can be regenerated without replaying earlier ones and parallel
/// schedules cannot change the draws.
class CounterRng {
public:
    using result_type = std::uint64_t;

    constexpr CounterRng(std::uint64_t seed, std::uint64_t path, std::uint64_t step) noexcept
        : key_(mix64(mix64(mix64(seed ^ 0x6a09e667f3bcc908ULL) ^ path) + step)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        counter_ += 0x9e3779b97f4a7c15ULL;
        return mix64(key_ + counter_);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace freesde::rmt
