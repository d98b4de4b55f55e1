#pragma once

// Dressed two-atom states in the dispersive regime, reflectivity maps over the
// relative atom detuning, and numeric line-feature extraction from spectra.

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavqed/mode_sampler.hpp"
#include "cavqed/qed_core.hpp"

namespace cavqed {

// Eigenstates of [[delta_A + J, J], [J, delta_B + J]] over {|eg,0>, |ge,0>}.
// The diagonal J is the single-atom dispersive shift, so identical atoms give
// the dark state at the bare frequency and the bright state at +2J.
struct DressedPair {
    std::array<double, 2> frequencies;                 // ascending
    std::array<std::array<double, 2>, 2> vectors;      // vectors[k] = (c_A, c_B), normalized
    std::array<double, 2> cavity_weights;              // |c_A + c_B|^2 / 2, equal couplings

    double splitting() const { return frequencies[1] - frequencies[0]; }
};

DressedPair dressed_frequencies(double delta_a, double delta_b, double coupling_j);

// sqrt((2J)^2 + delta_AB^2)
double anticrossing_splitting(double coupling_j, double delta_ab);

enum class Polarity { Peak, Dip };

struct LineFeature {
    double center = 0.0;
    double fwhm = 0.0;
    double depth = 0.0;  // prominence above (peak) or below (dip) the surrounding level
    bool merged = false; // two extrema closer than their mean FWHM
};

struct FeatureOptions {
    double min_prominence = 1e-6;
};

class FeatureError : public std::runtime_error {
public:
    FeatureError(const std::string& message, std::vector<LineFeature> found)
        : std::runtime_error(message), found_(std::move(found)) {}
    const std::vector<LineFeature>& found() const noexcept { return found_; }

private:
    std::vector<LineFeature> found_;
};

// Finds the `expected` most prominent extrema and measures their full width at
// half prominence by linear interpolation. Results are sorted by centre.
std::vector<LineFeature> extract_line_features(const Spectrum& spectrum, std::size_t expected,
                                               Polarity polarity, const FeatureOptions& options = {});

enum class MapMode {
    TwoAtom,          // both atoms coupled simultaneously
    SingleAtomAverage // mean of the two single-atom spectra (no interaction)
};

struct ReflectivityMap {
    std::vector<double> probe;
    std::vector<double> delta_ab;
    std::vector<double> values; // row-major, one row per delta_ab

    double at(std::size_t row, std::size_t column) const { return values[row * probe.size() + column]; }
    Spectrum row(std::size_t r) const;
};

struct AnticrossingScenario {
    CavityParams cavity;
    AtomScenario atom_a; // light_shift is a fixed offset; +delta_AB/2 is added
    AtomScenario atom_b; // light_shift is a fixed offset; -delta_AB/2 is added
    ModeGeometry geometry;
    MonteCarloConfig monte_carlo;
};

ReflectivityMap anticrossing_map(std::span<const double> probe, std::span<const double> delta_ab,
                                 const AnticrossingScenario& scenario, MapMode mode);

struct GapPoint {
    double delta_ab;
    double gap;     // distance between the two extracted lines; 0 when unresolved
    bool resolved;
};

std::vector<GapPoint> extract_gaps(const ReflectivityMap& map, Polarity polarity, const FeatureOptions& options = {});

struct HyperbolaFit {
    double coupling = 0.0; // fitted 2J, the gap at delta_AB = 0
    double r_squared = 0.0;
    std::size_t points = 0;
};

// Least-squares fit of gap = sqrt(G^2 + delta_AB^2) over resolved rows.
HyperbolaFit fit_anticrossing(std::span<const GapPoint> gaps);

} // namespace cavqed
