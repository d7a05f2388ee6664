#pragma once

#include <cstdint>
#include <initializer_list>

namespace evc {

/// Counter-based generator. A stream is identified by a master seed and a list
/// of integer keys (pixel, polarity, bin, ...); the n-th draw of a stream is a
/// pure function of (seed, keys, n), so results never depend on the order in
/// which streams are consumed.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
    {
        std::uint64_t k = mix(seed ^ 0x6a09e667f3bcc909ULL);
        for (auto key : keys) k = mix(k ^ mix(key + 0x9e3779b97f4a7c15ULL));
        key_ = k;
    }

    std::uint64_t next_u64() { return mix(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    std::uint64_t counter() const { return counter_; }

    static constexpr std::uint64_t mix(std::uint64_t z)
    {
        // splitmix64 finalizer
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

} // namespace evc
