#pragma once

// Reproducible random streams.
//
// Engine: std::mt19937_64, whose output sequence is fixed by the C++ standard.
// Uniforms take the top 53 bits; normals use the Box-Muller transform (both
// outputs, cosine first); Poisson variates use CDF inversion. None of these
// depend on a library's distribution classes, so sequences are identical
// across standard library implementations for a fixed seed.

#include <cstdint>
#include <random>

namespace cavqed {

// SplitMix64 finalizer applied to seed + golden-ratio * (index + 1).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in (0, 1].
    double uniform() noexcept;
    double normal() noexcept;
    std::uint64_t poisson(double mean);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace cavqed
