#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace easde {

//! SplitMix64 mixing step; used for seed derivation only.
inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

//! Derives the seed for a named sub-stream from a base seed. Stream ids are
//! fixed constants, so every consumer of a base seed gets an independent,
//! reproducible stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream)
{
    return splitmix64(splitmix64(base) ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
}

//! Deterministic random stream. The engine is mt19937_64, whose output
//! sequence is pinned by the language standard; the distributions below are
//! implemented here because standard-library distribution output is not
//! portable. Same seed, same numbers, on any conforming toolchain.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    //! Uniform on [0, 1), 53-bit resolution.
    double uniform()
    {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    //! Uniform on (0, 1]; never zero, safe under log().
    double uniform_pos()
    {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    //! Standard normal via Box-Muller; pairs are cached.
    double normal()
    {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform_pos();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    //! Gamma(shape, 1) via Marsaglia-Tsang squeeze; shape < 1 handled by the
    //! boost G(a) = G(a+1) * U^{1/a}.
    double gamma(double shape)
    {
        if (!(shape > 0.0))
            throw std::domain_error("gamma: shape must be positive");
        if (shape < 1.0) {
            double u = uniform_pos();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            double u = uniform_pos();
            if (u < 1.0 - 0.0331 * x * x * x * x)
                return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return d * v;
        }
    }

    //! Beta(a, b) from two gammas.
    double beta(double a, double b)
    {
        double ga = gamma(a);
        double gb = gamma(b);
        return ga / (ga + gb);
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace easde
