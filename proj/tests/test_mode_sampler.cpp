#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cavqed/errors.hpp"
#include "cavqed/mode_sampler.hpp"
#include "oracles.hpp"

using namespace cavqed;

namespace {

const ModeGeometry kGeom{};
const CavityParams kCavity{860.0, 2770.0, 0.0};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

AtomScenario atom(double c0, double wx, double wz, double shift = 0.0) {
    AtomScenario a;
    a.lines = {Transition::from_cooperativity(0.0, 6.0, c0)};
    a.light_shift = shift;
    a.wx_nm = wx;
    a.wz_nm = wz;
    return a;
}

} // namespace

TEST_CASE("local cooperativity examples") {
    CHECK(local_cooperativity(0.0, 0.0, 128.0, kGeom) == 128.0);
    CHECK(local_cooperativity(145.0, 0.0, 128.0, kGeom) < 1e-28);
    CHECK(local_cooperativity(0.0, 120.0, 1.0, kGeom) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
    CHECK(local_cooperativity(0.0, 120.0, 1.0, kGeom) == doctest::Approx(0.1353).epsilon(1e-3));
    ModeGeometry env = kGeom;
    env.envelope_um = 4.0;
    CHECK(local_cooperativity(2030.0, 0.0, 1.0, env) == doctest::Approx(std::exp(-4.0 * 2.03 * 2.03 / 16.0)).epsilon(1e-12));
}

TEST_CASE("geometry and motion validation") {
    ModeGeometry bad = kGeom;
    bad.a_nm = 0.0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    MotionParams m{-1.0, 0.0, 1, 1};
    CHECK_THROWS_AS(m.validate(), DomainError);
    MotionParams none{0.0, 0.0, 1, 0};
    CHECK_THROWS_AS(none.validate(), UsageError);
}

TEST_CASE("evanescent rabi frequency") {
    CHECK(2.0 * evanescent_rabi(7500.0, 260.0, 120.0) == doctest::Approx(1720.0).epsilon(0.002));
    CHECK(evanescent_rabi(7500.0, 0.0, 120.0) == 7500.0);
    CHECK(evanescent_rabi(7500.0, 120.0 * std::log(2.0), 120.0) == doctest::Approx(3750.0).epsilon(1e-14));
    CHECK_THROWS_AS(evanescent_rabi(7500.0, -1.0, 120.0), DomainError);
    // field and intensity exponents agree
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 500; ++k) {
        const double g = 2000.0 * u(gen), z = 400.0 * u(gen);
        const double c0 = cooperativity(g, 3630.0, 6.0);
        const double lhs = cooperativity(evanescent_rabi(g, z, 120.0), 3630.0, 6.0);
        const double rhs = local_cooperativity(0.0, z, c0, kGeom);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(rhs, 1e-300));
    }
}

TEST_CASE("thermal position spread") {
    CHECK(thermal_sigma(15.0, 115.0) == doctest::Approx(52.0).epsilon(0.02));
    CHECK(thermal_sigma(120.0, 115.0) == doctest::Approx(148.0).epsilon(0.02));
    CHECK(thermal_sigma(0.0, 115.0) == 0.0);
    CHECK(thermal_sigma(120.0, 550.0) == doctest::Approx(31.0).epsilon(0.03));
    CHECK_THROWS_AS(thermal_sigma(15.0, 0.0), DomainError);
    CHECK_THROWS_AS(thermal_sigma(-1.0, 115.0), DomainError);
}

TEST_CASE("sample positions") {
    const auto zero = sample_positions(MotionParams{0.0, 0.0, 5, 1000});
    for (const auto& p : zero) {
        CHECK(p.x_nm == 0.0);
        CHECK(p.z_nm == 0.0);
    }
    const MotionParams m{190.0, 33.0, 17, 5000};
    const auto a = sample_positions(m);
    const auto b = sample_positions(m);
    REQUIRE(a.size() == 5000);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x_nm == b[i].x_nm);
        CHECK(a[i].z_nm == b[i].z_nm);
    }
    // common random numbers: other widths rescale the same draws
    const auto c = sample_positions(MotionParams{95.0, 66.0, 17, 5000});
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(c[i].x_nm == doctest::Approx(a[i].x_nm / 2.0).epsilon(1e-14));
        CHECK(c[i].z_nm == doctest::Approx(a[i].z_nm * 2.0).epsilon(1e-14));
    }
}

TEST_CASE("closed-form mean against quadrature") {
    CHECK(mean_cooperativity_closed_form(128.0, MotionParams{0.0, 0.0, 0, 1}, kGeom).mean == 128.0);
    const auto cf = mean_cooperativity_closed_form(128.0, MotionParams{190.0, 33.0, 0, 1}, kGeom);
    CHECK(cf.exact);
    CHECK(cf.mean == doctest::Approx(74.4).epsilon(0.002));
    CHECK(mean_cooperativity_closed_form(128.0, MotionParams{1e6, 0.0, 0, 1}, kGeom).mean ==
          doctest::Approx(64.0).epsilon(1e-12));
    ModeGeometry env = kGeom;
    env.envelope_um = 4.0;
    CHECK_FALSE(mean_cooperativity_closed_form(128.0, MotionParams{190.0, 33.0, 0, 1}, env).exact);

    for (double wx : {0.0, 50.0, 120.0, 190.0, 300.0}) {
        for (double wz : {0.0, 10.0, 33.0, 60.0}) {
            const double ex = ref::gaussian_expectation(
                [](double x) { return std::pow(std::cos(std::numbers::pi * x / 290.0), 2); }, wx);
            const double ez = ref::gaussian_expectation([](double z) { return std::exp(-2.0 * z / 120.0); }, wz);
            const double got = mean_cooperativity_closed_form(1.0, MotionParams{wx, wz, 0, 1}, kGeom).mean;
            CHECK(rel(got, ex * ez) < 1e-8);
        }
    }
}

TEST_CASE("Monte Carlo mean converges to the closed form") {
    for (double c0 : {128.0, 56.0}) {
        const MotionParams m{190.0, 33.0, 2024, 100000};
        const auto pos = sample_positions(m);
        std::vector<double> c(pos.size());
        for (std::size_t i = 0; i < pos.size(); ++i) c[i] = local_cooperativity(pos[i].x_nm, pos[i].z_nm, c0, kGeom);
        const auto st = cooperativity_stats(c);
        const double se = st.std / std::sqrt(static_cast<double>(c.size()));
        CHECK(std::abs(st.mean - mean_cooperativity_closed_form(c0, m, kGeom).mean) < 3.0 * se);
        std::uint64_t mass = 0;
        for (auto k : st.histogram.counts) mass += k;
        CHECK(mass == c.size());
        CHECK(st.histogram.edges.size() == st.histogram.counts.size() + 1);
        CHECK(st.std >= 0.0);
    }
}

TEST_CASE("cooperativity stats of a fixed sample") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const auto st = cooperativity_stats(v, 4);
    CHECK(st.mean == 2.5);
    CHECK(st.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
    const std::vector<double> one{7.0};
    CHECK(cooperativity_stats(one).std == 0.0);
}

TEST_CASE("degenerate Monte Carlo equals the bare spectrum") {
    const auto grid = linspace(-800.0, 800.0, 161);
    const std::vector<AtomScenario> atoms{atom(71.0, 0.0, 0.0, 12.0)};
    const auto avg = averaged_spectrum(grid, kCavity, atoms, kGeom, MonteCarloConfig{1, 3});
    EmitterSet e;
    e.add_atom(12.0, {Transition::from_cooperativity(0.0, 6.0, 71.0)});
    const auto bare = spectrum(grid, kCavity, e);
    for (std::size_t i = 0; i < grid.size(); ++i)
        CHECK(std::abs(avg.spectrum.values()[i] - bare.values()[i]) <= 1e-13 * bare.values()[i]);
    CHECK(avg.stats[0].mean == 71.0);
}

TEST_CASE("averaged spectrum statistics") {
    const auto grid = linspace(-600.0, 600.0, 61);
    const std::vector<AtomScenario> atoms{atom(128.0, 190.0, 33.0)};
    const auto a = averaged_spectrum(grid, kCavity, atoms, kGeom, MonteCarloConfig{2000, 8});
    const auto b = averaged_spectrum(grid, kCavity, atoms, kGeom, MonteCarloConfig{8000, 9});
    const auto again = averaged_spectrum(grid, kCavity, atoms, kGeom, MonteCarloConfig{2000, 8});
    REQUIRE(a.spectrum.standard_error());
    double ratio = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(a.spectrum.values()[i] >= 0.0);
        CHECK(a.spectrum.values()[i] <= 1.0);
        CHECK(a.spectrum.values()[i] == again.spectrum.values()[i]);
        ratio += (*b.spectrum.standard_error())[i] / (*a.spectrum.standard_error())[i];
    }
    ratio /= static_cast<double>(grid.size());
    CHECK(ratio == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("independent atoms draw independent positions") {
    const auto grid = linspace(-100.0, 100.0, 3);
    const std::vector<AtomScenario> atoms{atom(56.0, 190.0, 33.0), atom(56.0, 190.0, 33.0)};
    const auto avg = averaged_spectrum(grid, kCavity, atoms, kGeom, MonteCarloConfig{500, 1});
    REQUIRE(avg.stats.size() == 2);
    CHECK(avg.stats[0].mean != avg.stats[1].mean);
}

TEST_CASE("mode scan") {
    ModeGeometry env = kGeom;
    env.envelope_um = 2.2;
    const std::vector<double> offsets{0.0, 1.0, 20.0};
    const auto pts = mode_scan(offsets, 128.0, env, MotionParams{190.0, 33.0, 12, 20000});
    REQUIRE(pts.size() == 3);
    CHECK(pts[0].mean_cooperativity == doctest::Approx(71.0).epsilon(0.1));
    CHECK(pts[1].mean_cooperativity == doctest::Approx(31.0).epsilon(0.1));
    CHECK(pts[2].mean_cooperativity < 1e-20);
    CHECK_THROWS_AS(mode_scan(offsets, 128.0, kGeom, MotionParams{190.0, 33.0, 12, 10}), UsageError);
}
