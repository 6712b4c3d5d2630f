#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace serpent
{
    /// SplitMix64 finalizer, used to derive independent substream seeds.
    constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
    {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    /// Pinned random stream: std::mt19937_64 (bit-exact by the standard) with
    /// hand-written uniform and Gaussian transforms, so results do not depend on
    /// the standard library's distribution implementations.
    ///
    ///   uniform()  = (next() >> 11) * 2^-53                  in [0, 1)
    ///   gaussian() = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)       Box-Muller, one draw per pair
    class Rng
    {
    public:
        explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

        /// Stream for a (master seed, key) pair; keys are point indices, pass numbers, ...
        static Rng substream(std::uint64_t master, std::uint64_t key)
        {
            return Rng(splitmix64(master ^ splitmix64(key + 0x632be59bd9b4e019ULL)));
        }

        std::uint64_t next() { return engine_(); }

        double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

        double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

        double gaussian()
        {
            const double u1 = 1.0 - uniform();
            const double u2 = uniform();
            return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        }

        double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

    private:
        std::mt19937_64 engine_;
    };
}
