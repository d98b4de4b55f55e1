#include <doctest.h>

#include <cmath>
#include <random>

#include "cavqed/random.hpp"
#include "oracles.hpp"

using namespace cavqed;

TEST_CASE("engine and seed derivation are the documented algorithms") {
    std::mt19937_64 e;
    e.discard(9999);
    CHECK(e() == 9981545732273789042ULL); // value fixed by the C++ standard
    // SplitMix64 from state 0: first output 0xE220A8397B1DCDAF
    CHECK(derive_seed(0, 0) == 0xE220A8397B1DCDAFULL);
    CHECK(derive_seed(1, 0) != derive_seed(0, 1));
}

TEST_CASE("golden samples") {
    CHECK(derive_seed(1, 0) == 10451216379200822465ULL);
    CHECK(derive_seed(42, 7) == 14769051326987775908ULL);
    Rng r(42);
    CHECK(r.uniform() == 0.75515553295453908);
    CHECK(r.uniform() == 0.63903139385469754);
    CHECK(r.uniform() == 0.75214520074802671);
    CHECK(r.normal() == 1.6390009625516802);
    CHECK(r.normal() == -1.1401186747857288);
    CHECK(r.normal() == -1.9399504193477655);
    CHECK(r.poisson(3.5) == 3);
    CHECK(r.poisson(3.5) == 2);
    CHECK(r.poisson(3.5) == 3);
    CHECK(r.poisson(1234.5) == 1193);
    CHECK(r.poisson(1234.5) == 1288);
}

TEST_CASE("uniform range and normal moments") {
    Rng r(9);
    double lo = 1.0, hi = 0.0;
    for (int k = 0; k < 100000; ++k) {
        const double x = r.uniform();
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    CHECK(lo > 0.0);
    CHECK(hi <= 1.0);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int k = 0; k < n; ++k) {
        const double x = r.normal();
        s += x;
        s2 += x * x;
    }
    CHECK(std::abs(s / n) < 4.0 / std::sqrt(n));
    CHECK(std::abs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("poisson sampler matches the pmf") {
    for (double mean : {0.0, 0.7, 12.0, 77.0, 900.0}) {
        Rng r(derive_seed(3, static_cast<std::uint64_t>(mean)));
        const int n = 50000;
        double s = 0.0, s2 = 0.0;
        for (int k = 0; k < n; ++k) {
            const auto x = static_cast<double>(r.poisson(mean));
            s += x;
            s2 += x * x;
        }
        const double m = s / n, var = s2 / n - m * m;
        if (mean == 0.0) {
            CHECK(s == 0.0);
            continue;
        }
        CHECK(std::abs(m - mean) < 5.0 * std::sqrt(mean / n));
        CHECK(std::abs(var - mean) < 6.0 * mean * std::sqrt(2.0 / n) + 0.05);
    }
    // chi-square against the exact pmf at mean 4
    Rng r(77);
    const int n = 100000;
    std::vector<int> counts(16, 0);
    for (int k = 0; k < n; ++k) {
        const auto x = r.poisson(4.0);
        ++counts[std::min<std::uint64_t>(x, 15)];
    }
    double chi2 = 0.0, tail = 1.0;
    for (int k = 0; k < 15; ++k) {
        const double p = ref::poisson_pmf(4.0, k);
        tail -= p;
        chi2 += (counts[k] - n * p) * (counts[k] - n * p) / (n * p);
    }
    chi2 += (counts[15] - n * tail) * (counts[15] - n * tail) / (n * tail);
    CHECK(chi2 < 40.0); // 15 dof, p ~ 5e-4
    CHECK_THROWS(r.poisson(-1.0));
}
