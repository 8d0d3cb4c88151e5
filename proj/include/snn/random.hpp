#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace snn {

/// Derives an independent stream seed from (seed, stream) with the splitmix64
/// finalizer. Used so that e.g. every epoch shuffles with its own seed while
/// the whole run stays a pure function of one user-visible seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic random source. The raw stream is std::mt19937_64, whose
/// output sequence is fixed by the C++ standard, and every derived draw
/// (uniform reals, bounded integers, gaussians, shuffles) is implemented
/// here with a fixed algorithm instead of the standard-library
/// distributions, which are not bit-stable across implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1): the top 53 bits of one raw draw.
    double uniform01() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Standard normal via Box-Muller; uses two uniform draws per value.
    double gaussian() {
        const double u1 = 1.0 - uniform01(); // (0, 1], keeps log() finite
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
    }

    /// Unbiased integer in [0, n) by rejection sampling.
    std::uint64_t bounded(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
        std::uint64_t v = next();
        while (v >= limit) v = next();
        return v % n;
    }

    /// Fisher-Yates shuffle, descending index order.
    template <class T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace snn
