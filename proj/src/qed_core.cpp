#include "cavqed/qed_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cavqed/errors.hpp"

namespace cavqed {

namespace {

void require_finite(double value, const char* what) {
    if (!std::isfinite(value)) throw DomainError(std::string(what) + " must be finite");
}

void check_grid(const std::vector<double>& probe) {
    if (probe.empty()) throw UsageError("spectrum grid is empty");
    for (std::size_t i = 0; i < probe.size(); ++i) {
        require_finite(probe[i], "probe detuning");
        if (i > 0 && !(probe[i] > probe[i - 1]))
            throw UsageError("spectrum grid must be strictly increasing");
    }
}

} // namespace

CavityParams::CavityParams(double kappa_wg, double kappa_sc, double delta_c)
    : kappa_wg_(kappa_wg), kappa_sc_(kappa_sc), delta_c_(delta_c) {
    require_finite(kappa_wg, "kappa_wg");
    require_finite(kappa_sc, "kappa_sc");
    require_finite(delta_c, "delta_c");
    if (kappa_wg < 0.0 || kappa_sc < 0.0) throw DomainError("cavity decay rates must be non-negative");
    if (!(kappa_wg + kappa_sc > 0.0)) throw DomainError("total cavity decay must be positive");
}

Transition::Transition(double delta, double gamma, double cooperativity)
    : delta_(delta), gamma_(gamma), cooperativity_(cooperativity) {
    require_finite(delta, "line detuning");
    require_finite(gamma, "gamma");
    require_finite(cooperativity, "cooperativity");
    if (!(gamma > 0.0)) throw DomainError("line width gamma must be positive");
    if (cooperativity < 0.0) throw DomainError("cooperativity must be non-negative");
}

Transition Transition::from_cooperativity(double delta, double gamma, double cooperativity) {
    return Transition(delta, gamma, cooperativity);
}

Transition Transition::from_rabi(double delta, double gamma, double g, double kappa) {
    return Transition(delta, gamma, cavqed::cooperativity(g, kappa, gamma));
}

double Transition::rabi(double kappa) const {
    return rabi_from_cooperativity(cooperativity_, kappa, gamma_);
}

std::size_t EmitterSet::add_atom(double light_shift, std::vector<Transition> lines) {
    require_finite(light_shift, "light shift");
    atoms_.push_back({light_shift, std::move(lines)});
    return atoms_.size() - 1;
}

std::size_t EmitterSet::line_count() const noexcept {
    std::size_t n = 0;
    for (const auto& atom : atoms_) n += atom.lines.size();
    return n;
}

Spectrum::Spectrum(Unchecked, std::vector<double> probe, std::vector<double> values,
                   std::optional<std::vector<double>> stderr_values)
    : probe_(std::move(probe)), values_(std::move(values)), stderr_(std::move(stderr_values)) {
    check_grid(probe_);
    if (values_.size() != probe_.size()) throw UsageError("spectrum values and grid differ in length");
    if (stderr_ && stderr_->size() != probe_.size())
        throw UsageError("spectrum stderr and grid differ in length");
}

Spectrum::Spectrum(std::vector<double> probe, std::vector<double> values,
                   std::optional<std::vector<double>> stderr_values)
    : Spectrum(Unchecked{}, std::move(probe), std::move(values), std::move(stderr_values)) {
    for (double v : values_) {
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("reflectivity outside [0, 1]");
    }
}

Spectrum Spectrum::measured(std::vector<double> probe, std::vector<double> values,
                            std::optional<std::vector<double>> stderr_values) {
    Spectrum s(Unchecked{}, std::move(probe), std::move(values), std::move(stderr_values));
    for (double v : s.values_) require_finite(v, "measured value");
    return s;
}

std::vector<double> linspace(double start, double stop, std::size_t points) {
    if (points == 0) throw UsageError("linspace needs at least one point");
    if (points == 1) return {start};
    std::vector<double> out(points);
    const double n = static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
        const double k = static_cast<double>(i);
        out[i] = (start * (n - k) + stop * k) / n;
    }
    return out;
}

double cooperativity(double g, double kappa, double gamma) {
    if (!(kappa > 0.0) || !(gamma > 0.0)) throw DomainError("cooperativity needs kappa > 0 and gamma > 0");
    if (g < 0.0) throw DomainError("Rabi frequency must be non-negative");
    return 4.0 * g * g / (kappa * gamma);
}

double rabi_from_cooperativity(double cooperativity, double kappa, double gamma) {
    if (!(kappa > 0.0) || !(gamma > 0.0)) throw DomainError("Rabi frequency needs kappa > 0 and gamma > 0");
    if (cooperativity < 0.0) throw DomainError("cooperativity must be non-negative");
    return 0.5 * std::sqrt(cooperativity * kappa * gamma);
}

namespace {

Complex cavity_denominator(double probe, const CavityParams& cavity, const EmitterSet& emitters) {
    require_finite(probe, "probe detuning");
    const double kappa = cavity.kappa();
    Complex denom(0.5 * kappa, -(probe - cavity.delta_c()));
    for (const auto& atom : emitters.atoms()) {
        for (const auto& line : atom.lines) {
            // g^2 = C kappa gamma / 4
            const double g2 = 0.25 * line.cooperativity() * kappa * line.gamma();
            const double delta = probe - (line.delta() + atom.light_shift);
            denom += g2 / Complex(0.5 * line.gamma(), -delta);
        }
    }
    return denom;
}

} // namespace

Complex reflectivity_amplitude(double probe, const CavityParams& cavity, const EmitterSet& emitters) {
    return cavity.kappa_wg() / cavity_denominator(probe, cavity, emitters) - 1.0;
}

double reflectivity(double probe, const CavityParams& cavity, const EmitterSet& emitters) {
    const Complex denom = cavity_denominator(probe, cavity, emitters);
    const double kwg = cavity.kappa_wg();
    const double loss = kwg * (2.0 * denom.real() - kwg) / std::norm(denom);
    return std::clamp(1.0 - loss, 0.0, 1.0);
}

Spectrum spectrum(std::span<const double> grid, const CavityParams& cavity, const EmitterSet& emitters) {
    std::vector<double> probe(grid.begin(), grid.end());
    check_grid(probe);
    std::vector<double> values(probe.size());
    for (std::size_t i = 0; i < probe.size(); ++i)
        values[i] = reflectivity(probe[i], cavity, emitters);
    return Spectrum(std::move(probe), std::move(values));
}

double purcell_linewidth(double cooperativity, double gamma, double cavity_detuning, double kappa) {
    if (!(gamma > 0.0) || !(kappa > 0.0)) throw DomainError("Purcell linewidth needs gamma > 0 and kappa > 0");
    const double x = 2.0 * cavity_detuning / kappa;
    return gamma * (1.0 + cooperativity / (1.0 + x * x));
}

double dispersive_shift(double cooperativity, double kappa, double gamma, double cavity_detuning) {
    if (cavity_detuning == 0.0) throw DomainError("dispersive shift is undefined on resonance");
    if (!(kappa > 0.0) || !(gamma > 0.0)) throw DomainError("dispersive shift needs kappa > 0 and gamma > 0");
    return cooperativity * kappa * gamma / (4.0 * cavity_detuning);
}

} // namespace cavqed
