#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ntnkb {

// Deterministic generator used everywhere a seed appears. The engine is
// std::mt19937_64 (bit-specified by the standard); the value mappings below
// are written out so streams are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Seed derived from several integers, e.g. (seed, epoch, triplet index).
    static Rng derived(std::initializer_list<std::uint64_t> parts) { return Rng(mix(parts)); }

    static std::uint64_t mix(std::initializer_list<std::uint64_t> parts) {
        std::uint64_t h = 0x6a09e667f3bcc908ULL;
        for (auto p : parts) h = splitmix(h ^ splitmix(p));
        return h;
    }

    std::uint64_t next() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform on [-r, r].
    double symmetric(double r) { return (2.0 * uniform01() - 1.0) * r; }

    // Uniform integer in [0, n), unbiased by rejection. n must be positive.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % n;
    }

private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::mt19937_64 engine_;
};

}  // namespace ntnkb
