#pragma once

// Weak-drive reflection of a one-sided cavity with N multilevel emitters.
//
// Units: every rate and detuning is an ordinary frequency in MHz with the
// 2*pi factored out. All formulas used here are homogeneous in frequency, so
// the convention never mixes with angular units. Probe detuning 0 is the bare
// F=2 -> F'=3 line.

#include <complex>
#include <optional>
#include <span>
#include <vector>

namespace cavqed {

using Complex = std::complex<double>;

class CavityParams {
public:
    // kappa_wg: decay into the collected waveguide; kappa_sc: all other loss;
    // delta_c: cavity detuning from the probe reference.
    CavityParams(double kappa_wg, double kappa_sc, double delta_c = 0.0);

    double kappa_wg() const noexcept { return kappa_wg_; }
    double kappa_sc() const noexcept { return kappa_sc_; }
    double delta_c() const noexcept { return delta_c_; }
    double kappa() const noexcept { return kappa_wg_ + kappa_sc_; }

    CavityParams with_detuning(double delta_c) const { return {kappa_wg_, kappa_sc_, delta_c}; }

private:
    double kappa_wg_;
    double kappa_sc_;
    double delta_c_;
};

// One ground -> excited line. The coupling is stored as a cooperativity; the
// Rabi frequency is only meaningful relative to a cavity linewidth.
class Transition {
public:
    static Transition from_cooperativity(double delta, double gamma, double cooperativity);
    static Transition from_rabi(double delta, double gamma, double g, double kappa);

    double delta() const noexcept { return delta_; }
    double gamma() const noexcept { return gamma_; }
    double cooperativity() const noexcept { return cooperativity_; }
    double rabi(double kappa) const;

    Transition with_cooperativity(double cooperativity) const {
        return from_cooperativity(delta_, gamma_, cooperativity);
    }

private:
    Transition(double delta, double gamma, double cooperativity);

    double delta_;
    double gamma_;
    double cooperativity_;
};

struct AtomLines {
    double light_shift = 0.0; // added to every line detuning of this atom
    std::vector<Transition> lines;
};

// Emitters sharing the cavity mode, grouped per atom. Empty is an empty cavity.
class EmitterSet {
public:
    EmitterSet() = default;
    explicit EmitterSet(std::vector<AtomLines> atoms) : atoms_(std::move(atoms)) {}

    std::size_t add_atom(double light_shift, std::vector<Transition> lines);

    const std::vector<AtomLines>& atoms() const noexcept { return atoms_; }
    std::vector<AtomLines>& atoms() noexcept { return atoms_; }
    bool empty() const noexcept { return atoms_.empty(); }
    std::size_t line_count() const noexcept;

private:
    std::vector<AtomLines> atoms_;
};

// |r|^2 sampled on a strictly increasing probe grid.
class Spectrum {
public:
    // Model spectrum: values must lie in [0, 1].
    Spectrum(std::vector<double> probe, std::vector<double> values,
             std::optional<std::vector<double>> stderr_values = std::nullopt);

    // Measured or noise-added data: same grid checks, values unrestricted.
    static Spectrum measured(std::vector<double> probe, std::vector<double> values,
                             std::optional<std::vector<double>> stderr_values = std::nullopt);

    const std::vector<double>& probe() const noexcept { return probe_; }
    const std::vector<double>& values() const noexcept { return values_; }
    const std::optional<std::vector<double>>& standard_error() const noexcept { return stderr_; }
    std::size_t size() const noexcept { return probe_.size(); }

private:
    struct Unchecked {};
    Spectrum(Unchecked, std::vector<double> probe, std::vector<double> values,
             std::optional<std::vector<double>> stderr_values);

    std::vector<double> probe_;
    std::vector<double> values_;
    std::optional<std::vector<double>> stderr_;
};

std::vector<double> linspace(double start, double stop, std::size_t points);

// C = 4 g^2 / (kappa gamma)
double cooperativity(double g, double kappa, double gamma);
// g = sqrt(C kappa gamma) / 2
double rabi_from_cooperativity(double cooperativity, double kappa, double gamma);

// r = kappa_wg / (kappa/2 - i delta_c + sum g^2 / (gamma/2 - i delta)) - 1
Complex reflectivity_amplitude(double probe, const CavityParams& cavity, const EmitterSet& emitters);

// |r|^2 evaluated as 1 - kappa_wg (2 Re D - kappa_wg) / |D|^2, which is passive by construction.
double reflectivity(double probe, const CavityParams& cavity, const EmitterSet& emitters);

Spectrum spectrum(std::span<const double> grid, const CavityParams& cavity, const EmitterSet& emitters);

// Gamma = gamma (1 + C / (1 + 4 Delta^2 / kappa^2))
double purcell_linewidth(double cooperativity, double gamma, double cavity_detuning, double kappa);

// J = g^2 / Delta = C kappa gamma / (4 Delta); Delta = 0 is a domain error.
double dispersive_shift(double cooperativity, double kappa, double gamma, double cavity_detuning);

} // namespace cavqed
