#pragma once

// Position dependence of the cooperativity in a standing-wave evanescent mode
// and Monte Carlo averaging of spectra over thermal atomic motion.
//
// Lengths: x, z, a, z0, w_x, w_z in nm; envelope length and tweezer offsets in um.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cavqed/qed_core.hpp"

namespace cavqed {

struct ModeGeometry {
    double a_nm = 290.0;
    double z0_nm = 120.0;
    // 1/e length L of the intensity envelope exp(-4 x^2 / L^2); disabled when empty.
    std::optional<double> envelope_um;

    void validate() const;
};

struct MotionParams {
    double wx_nm = 0.0;
    double wz_nm = 0.0;
    std::uint64_t seed = 0;
    std::size_t n_samples = 1;

    void validate() const;
};

struct Histogram {
    std::vector<double> edges;          // counts.size() + 1 entries
    std::vector<std::uint64_t> counts;
};

struct CooperativityStats {
    double mean = 0.0;
    double std = 0.0;
    Histogram histogram;
};

struct Position {
    double x_nm;
    double z_nm;
};

// Mode intensity relative to the antinode at the surface-side trap centre.
double mode_factor(double x_nm, double z_nm, const ModeGeometry& geom);

// Mode factor of an atom displaced by pos from a trap centred on an antinode at
// offset_um along the cavity; the envelope is evaluated at offset + x.
double displaced_mode_factor(const Position& pos, double offset_um, const ModeGeometry& geom);

// C = C0 cos^2(pi x / a) exp(-2 z / z0) [* exp(-4 x^2 / L^2)]
double local_cooperativity(double x_nm, double z_nm, double c0, const ModeGeometry& geom);

// Field amplitude decays at half the intensity rate: g(z) = g_surface exp(-z / z0).
double evanescent_rabi(double g_surface, double z_nm, double z0_nm);

inline constexpr double kRb87MassAmu = 86.909180527;

// Harmonic-oscillator thermal position spread sqrt(kB T / (m (2 pi nu)^2)), in nm.
double thermal_sigma(double temperature_uk, double trap_freq_khz, double mass_amu = kRb87MassAmu);

// x ~ N(0, w_x^2), z ~ N(0, w_z^2), drawn as (x, z) pairs from Rng(seed). Positions
// for different widths and the same seed are exact rescalings of each other.
std::vector<Position> sample_positions(const MotionParams& motion);

struct ClosedFormMean {
    double mean;
    bool exact; // false when the envelope is enabled (it is ignored)
};

// <C> = C0 * (1 + exp(-2 pi^2 w_x^2 / a^2)) / 2 * exp(2 w_z^2 / z0^2)
ClosedFormMean mean_cooperativity_closed_form(double c0, const MotionParams& motion, const ModeGeometry& geom);

CooperativityStats cooperativity_stats(std::span<const double> samples, std::size_t bins = 50);

struct AtomScenario {
    std::vector<Transition> lines;        // cooperativities are C0 values at the trap centre
    double light_shift = 0.0;             // MHz, added to every line
    double light_shift_jitter = 0.0;      // MHz, std of a Gaussian per-sample light-shift fluctuation
    double wx_nm = 0.0;
    double wz_nm = 0.0;
    double offset_um = 0.0;               // tweezer offset along the cavity axis (envelope only)
    // Probability that each line is present; empty means all 1.
    std::vector<double> line_occupancy;
};

struct MonteCarloConfig {
    std::size_t samples = 1;
    std::uint64_t seed = 0;
};

struct AveragedSpectrum {
    Spectrum spectrum;
    // Per atom: distribution of the cooperativity of its strongest line.
    std::vector<CooperativityStats> stats;
};

// Per-atom random streams: positions from Rng(derive_seed(seed, 2 * atom)),
// light-shift jitter from Rng(derive_seed(seed, 2 * atom + 1)).
AveragedSpectrum averaged_spectrum(std::span<const double> grid, const CavityParams& cavity,
                                   std::span<const AtomScenario> atoms, const ModeGeometry& geom,
                                   const MonteCarloConfig& mc);

struct ModeScanPoint {
    double offset_um;
    double mean_cooperativity;
    double standard_error;
};

// <C> versus tweezer offset: the atom stays centred on a lattice antinode
// while the envelope is evaluated at offset + x. Requires an envelope.
std::vector<ModeScanPoint> mode_scan(std::span<const double> offsets_um, double c_peak,
                                     const ModeGeometry& geom, const MotionParams& motion);

} // namespace cavqed
