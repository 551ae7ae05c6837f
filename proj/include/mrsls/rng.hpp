#pragma once

#include <cstdint>
#include <random>

namespace mrsls
{

    // Seeded generator with platform-independent derived distributions.
    // The standard <random> distributions are implementation-defined, so
    // everything here is computed from raw engine output.
    class Rng
    {
    public:
        explicit Rng(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

        std::uint64_t next()
        {
            ++draws_;
            return engine_();
        }

        // Uniform in [0, 1) with 53 random bits.
        double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

        double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

        // Uniform integer in [0, n); n > 0. Rejection keeps it unbiased.
        std::uint64_t below(std::uint64_t n)
        {
            const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
            std::uint64_t x = next();
            while (x >= limit)
                x = next();
            return x % n;
        }

        std::uint64_t seed() const noexcept { return seed_; }

        // Same seed and same number of draws imply the same engine state.
        std::uint64_t draws() const noexcept { return draws_; }

    private:
        std::mt19937_64 engine_;
        std::uint64_t seed_;
        std::uint64_t draws_ = 0;
    };

} // namespace mrsls
