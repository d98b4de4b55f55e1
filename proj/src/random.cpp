#include "cavqed/random.hpp"

#include <cmath>
#include <numbers>

#include "cavqed/errors.hpp"

namespace cavqed {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double Rng::uniform() noexcept {
    constexpr double scale = 1.0 / 9007199254740992.0; // 2^-53
    return static_cast<double>((engine_() >> 11) + 1) * scale;
}

double Rng::normal() noexcept {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::uint64_t Rng::poisson(double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) throw DomainError("Poisson mean must be finite and non-negative");
    if (mean == 0.0) return 0;
    // exp(-mean) underflows past ~700; split using additivity of Poisson variables.
    constexpr double max_chunk = 500.0;
    if (mean > max_chunk) {
        std::uint64_t total = 0;
        double remaining = mean;
        while (remaining > max_chunk) {
            total += poisson(max_chunk);
            remaining -= max_chunk;
        }
        return total + poisson(remaining);
    }
    const double u = uniform();
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t k = 0;
    // Stop once the tail mass is below double resolution.
    while (u > cdf && p > 0.0) {
        ++k;
        p *= mean / static_cast<double>(k);
        cdf += p;
    }
    return k;
}

} // namespace cavqed
