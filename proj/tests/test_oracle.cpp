#include <doctest.h>

#include <cmath>
#include <random>

#include "cavqed/errors.hpp"
#include "cavqed/oracle.hpp"

using namespace cavqed;

namespace {

const CavityParams kCavity{860.0, 2770.0, 0.0};

EmitterSet single(double c) {
    EmitterSet e;
    e.add_atom(0.0, {Transition::from_cooperativity(0.0, 6.0, c)});
    return e;
}

EmitterSet hyperfine() {
    EmitterSet e;
    e.add_atom(0.0, {Transition::from_cooperativity(-424.0, 6.0, 9.0), Transition::from_cooperativity(-267.0, 6.0, 46.0),
                     Transition::from_cooperativity(0.0, 6.0, 71.0)});
    return e;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

} // namespace

TEST_CASE("linear response solve equals the closed form") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
        const CavityParams cavity(10.0 + 5000.0 * u(gen), 5000.0 * u(gen), -8000.0 + 16000.0 * u(gen));
        EmitterSet e;
        const int atoms = static_cast<int>(u(gen) * 3.0);
        for (int a = 0; a < atoms; ++a) {
            std::vector<Transition> lines;
            const int n = 1 + static_cast<int>(u(gen) * 3.0);
            for (int l = 0; l < n; ++l)
                lines.push_back(Transition::from_cooperativity(-500.0 + 1000.0 * u(gen), 0.5 + 20.0 * u(gen),
                                                               std::pow(10.0, -2.0 + 5.0 * u(gen))));
            e.add_atom(-100.0 + 200.0 * u(gen), lines);
        }
        const double p = -3000.0 + 6000.0 * u(gen);
        const Complex a = linear_response_solve(p, cavity, e);
        const Complex b = reflectivity_amplitude(p, cavity, e);
        CHECK(std::abs(a - b) <= 1e-12 * std::abs(b));
    }
}

TEST_CASE("linear response special cases") {
    const Complex r = linear_response_solve(0.0, kCavity, EmitterSet{});
    CHECK(r.real() == doctest::Approx(2.0 * 860.0 / 3630.0 - 1.0).epsilon(1e-14));
    EmitterSet two;
    two.add_atom(0.0, {Transition::from_cooperativity(30.0, 6.0, 20.0)});
    two.add_atom(0.0, {Transition::from_cooperativity(30.0, 6.0, 35.0)});
    EmitterSet one;
    one.add_atom(0.0, {Transition::from_cooperativity(30.0, 6.0, 55.0)});
    for (double p : {-300.0, 0.0, 29.0, 30.0, 31.0, 400.0})
        CHECK(std::abs(linear_response_solve(p, kCavity, two) - linear_response_solve(p, kCavity, one)) < 1e-12);
}

TEST_CASE("undriven steady state is the vacuum") {
    const SystemSpec spec{kCavity, single(71.0), 3, 0.0, DecayModel::Individual};
    const SteadyState ss = lindblad_steady_state(spec, 0.0);
    CHECK(std::abs(ss.field) < 1e-12);
    CHECK(ss.excited_population < 1e-12);
    CHECK(ss.photon_number < 1e-12);
    CHECK(std::abs(ss.rho(0, 0) - 1.0) < 1e-10);
    CHECK(ss.residual < 1e-10);
    CHECK_THROWS_AS(oracle_reflectivity(spec, 0.0), DomainError);
}

TEST_CASE("empty cavity is linear for any drive") {
    for (double drive : {0.1, 1.0, 5.0}) {
        const SystemSpec spec{kCavity, EmitterSet{}, 8, drive, DecayModel::Individual};
        for (double p : {-3000.0, -500.0, 0.0, 1000.0}) {
            const double expected = reflectivity(p, kCavity, EmitterSet{});
            CHECK(std::abs(oracle_reflectivity(spec, p) - expected) < 1e-8);
        }
    }
}

TEST_CASE("weak drive reproduces the reflectivity of one line") {
    const SystemSpec spec{kCavity, single(71.0), 3, 0.5, DecayModel::Individual};
    for (int k = 0; k <= 40; ++k) {
        const double p = -800.0 + 40.0 * k;
        const SteadyState ss = lindblad_steady_state(spec, p);
        CHECK(ss.excited_population < 1e-3);
        CHECK(ss.residual < 1e-10);
        CHECK(rel(oracle_reflectivity(spec, p), reflectivity(p, kCavity, spec.emitters)) < 0.01);
    }
}

TEST_CASE("drive sweep converges to the weak-drive value") {
    const double analytic = reflectivity(0.0, kCavity, single(71.0));
    double previous = std::numeric_limits<double>::infinity();
    double last = 0.0, before_last = 0.0;
    for (double drive = 8.0; drive >= 0.25; drive /= 2.0) {
        const SystemSpec spec{kCavity, single(71.0), 3, drive, DecayModel::Individual};
        const double diff = std::abs(oracle_reflectivity(spec, 0.0) - analytic);
        CHECK(diff < previous);
        previous = diff;
        before_last = last;
        last = oracle_reflectivity(spec, 0.0);
    }
    // deviation is quadratic in the drive amplitude: Richardson step for ratio 4
    const double extrapolated = last + (last - before_last) / 3.0;
    CHECK(rel(extrapolated, analytic) < 0.005);
}

TEST_CASE("saturation breaks the weak-drive formula") {
    double drive = 1.0;
    SteadyState ss;
    SystemSpec spec{kCavity, single(71.0), 3, drive, DecayModel::Individual};
    while (true) {
        spec.drive_amplitude = drive;
        ss = lindblad_steady_state(spec, 0.0);
        if (ss.excited_population >= 0.1) break;
        drive *= 1.25;
    }
    CHECK(ss.excited_population < 0.2);
    CHECK(rel(oracle_reflectivity(spec, 0.0), reflectivity(0.0, kCavity, spec.emitters)) > 0.01);
}

TEST_CASE("separate decay channels versus one collective channel") {
    // Weakly coupled hyperfine lines: the cross terms of a collective jump
    // operator are negligible for 157 MHz splittings.
    EmitterSet weak;
    weak.add_atom(0.0, {Transition::from_cooperativity(-424.0, 6.0, 0.5), Transition::from_cooperativity(-267.0, 6.0, 0.5),
                        Transition::from_cooperativity(0.0, 6.0, 0.5)});
    const SystemSpec individual{kCavity, weak, 3, 0.3, DecayModel::Individual};
    const SystemSpec cumulative{kCavity, weak, 3, 0.3, DecayModel::Cumulative};
    for (double p = -600.0; p <= 400.0; p += 25.0)
        CHECK(rel(oracle_reflectivity(cumulative, p), oracle_reflectivity(individual, p)) < 0.01);
}

TEST_CASE("collective decay matches the cross-coupled linear response") {
    // With Purcell-broadened lines the two decay models differ by up to ~15%
    // between lines; the collective model is checked against the linear
    // equations with the cross-decay terms -sqrt(gamma_i gamma_j)/2 sigma_j.
    const EmitterSet e = hyperfine();
    const SystemSpec cumulative{kCavity, e, 3, 0.3, DecayModel::Cumulative};
    const auto& lines = e.atoms()[0].lines;
    const Complex i(0.0, 1.0);
    for (double p = -600.0; p <= 400.0; p += 50.0) {
        Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
        Eigen::Vector4cd b = Eigen::Vector4cd::Zero();
        m(0, 0) = 3630.0 / 2.0 - i * p;
        b(0) = std::sqrt(860.0);
        for (int k = 0; k < 3; ++k) {
            const double g = lines[k].rabi(3630.0);
            m(0, 1 + k) = i * g;
            m(1 + k, 0) = i * g;
            for (int j = 0; j < 3; ++j)
                m(1 + k, 1 + j) = k == j ? Complex(3.0, -(p - lines[k].delta())) : Complex(3.0, 0.0);
        }
        const Eigen::Vector4cd x = m.partialPivLu().solve(b);
        const double expected = std::norm(std::sqrt(860.0) * x(0) - 1.0);
        CHECK(rel(oracle_reflectivity(cumulative, p), expected) < 2e-3);
    }
}

TEST_CASE("Fock cutoff convergence at the accepted drive") {
    for (double p : {-200.0, 0.0, 150.0}) {
        const SystemSpec three{kCavity, single(71.0), 3, 0.5, DecayModel::Individual};
        const SystemSpec four{kCavity, single(71.0), 4, 0.5, DecayModel::Individual};
        CHECK(std::abs(oracle_reflectivity(three, p) - oracle_reflectivity(four, p)) < 1e-6);
    }
}

TEST_CASE("dimension cap and validation") {
    EmitterSet many;
    for (int a = 0; a < 4; ++a) many.add_atom(0.0, {Transition::from_cooperativity(0.0, 6.0, 1.0),
                                                  Transition::from_cooperativity(10.0, 6.0, 1.0),
                                                  Transition::from_cooperativity(20.0, 6.0, 1.0)});
    const SystemSpec big{kCavity, many, 3, 0.1, DecayModel::Individual};
    CHECK(hilbert_dimension(big) == 4 * 256);
    LindbladOptions tight;
    tight.max_dimension = 512;
    CHECK_THROWS_AS(lindblad_steady_state(big, 0.0, tight), UsageError);
    const SystemSpec bad{kCavity, single(1.0), 0, 0.1, DecayModel::Individual};
    CHECK_THROWS_AS(lindblad_steady_state(bad, 0.0), UsageError);
    const SystemSpec negative{kCavity, single(1.0), 2, -0.1, DecayModel::Individual};
    CHECK_THROWS_AS(lindblad_steady_state(negative, 0.0), DomainError);
}

TEST_CASE("sparse path agrees with the dense path") {
    EmitterSet two;
    two.add_atom(10.0, {Transition::from_cooperativity(0.0, 6.0, 20.0), Transition::from_cooperativity(-267.0, 6.0, 8.0)});
    two.add_atom(-10.0, {Transition::from_cooperativity(0.0, 6.0, 20.0), Transition::from_cooperativity(-267.0, 6.0, 8.0)});
    const SystemSpec spec{kCavity, two, 2, 0.4, DecayModel::Individual};
    REQUIRE(hilbert_dimension(spec) == 27);
    LindbladOptions dense;
    dense.dense_liouvillian = 1000000;
    LindbladOptions sparse;
    sparse.dense_liouvillian = 0;
    for (double p : {-50.0, 0.0, 30.0}) {
        const SteadyState a = lindblad_steady_state(spec, p, dense);
        const SteadyState b = lindblad_steady_state(spec, p, sparse);
        CHECK(std::abs(a.field - b.field) < 1e-10);
        CHECK(b.residual < 1e-10);
    }
}

TEST_CASE("property: steady states are density operators") {
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 500; ++k) {
        const CavityParams cavity(10.0 + 3000.0 * u(gen), 3000.0 * u(gen), -2000.0 + 4000.0 * u(gen));
        EmitterSet e;
        const int atoms = static_cast<int>(u(gen) * 3.0);
        for (int a = 0; a < atoms; ++a) {
            std::vector<Transition> lines;
            const int n = 1 + static_cast<int>(u(gen) * (atoms == 2 ? 1.0 : 2.0));
            for (int l = 0; l < n; ++l)
                lines.push_back(Transition::from_cooperativity(-300.0 + 600.0 * u(gen), 0.5 + 20.0 * u(gen),
                                                               100.0 * u(gen)));
            e.add_atom(-50.0 + 100.0 * u(gen), lines);
        }
        const int cutoff = 1 + static_cast<int>(u(gen) * 3.0);
        const double drive = std::pow(10.0, -2.0 + 3.0 * u(gen));
        const SystemSpec spec{cavity, e, cutoff, drive, u(gen) < 0.5 ? DecayModel::Individual : DecayModel::Cumulative};
        const SteadyState ss = lindblad_steady_state(spec, -1000.0 + 2000.0 * u(gen));
        const auto& rho = ss.rho;
        CHECK(std::abs(rho.trace() - 1.0) < 1e-10);
        CHECK((rho - rho.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(min_eigenvalue(rho) >= -1e-10);
        CHECK(ss.residual < 1e-10);
    }
}
