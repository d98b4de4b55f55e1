#pragma once

// Least-squares recovery of cooperativity amplitudes and motion widths from
// reflection spectra, with residual-bootstrap uncertainties.
//
// The Monte Carlo seed and sample count are fixed for the whole fit, so the
// model is a deterministic, smooth function of the parameters (common random
// numbers): changing w_x or w_z rescales the same underlying normal draws.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cavqed/mode_sampler.hpp"
#include "cavqed/qed_core.hpp"

namespace cavqed {

enum class ParameterKind {
    LineC0,         // cooperativity amplitude of (atom, line)
    LineRabi,       // same line, parametrised by g0 with C0 = 4 g0^2 / (kappa gamma)
    LineOccupancy,  // probability that (atom, line) is present
    Wx,             // motion width along x, shared by all atoms
    Wz,             // motion width along z, shared by all atoms
    CavityDetuning, // delta_c
    Scale,          // multiplies the model spectrum
    Offset          // added to the model spectrum
};

struct FitParameter {
    ParameterKind kind;
    double lower;
    double upper;
    std::size_t atom = 0;
    std::size_t line = 0;

    std::string name() const;
};

struct FitModel {
    CavityParams cavity;
    std::vector<AtomScenario> atoms;
    ModeGeometry geometry;
    MonteCarloConfig monte_carlo;
    double scale = 1.0;
    double offset = 0.0;
};

struct FitOptions {
    std::size_t max_iterations = 500;
    double relative_tolerance = 1e-8; // relative objective decrease
    double step_tolerance = 1e-6;     // step norm in bound-normalised coordinates
    bool weight_by_stderr = false;
};

struct FitProblem {
    Spectrum data;
    std::optional<std::vector<double>> weights; // per point; overrides stderr weighting
    FitModel model;
    std::vector<FitParameter> parameters;
    FitOptions options;

    void validate(std::span<const double> initial) const;
};

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> values;
    std::vector<double> initial; // starting point of the fit
    double residual_sum_squares = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    double final_step_norm = 0.0;
    std::vector<double> objective_trace; // objective after each accepted step, starting at the guess
};

struct BootstrapResult {
    std::vector<double> std_errors;           // per parameter; empty when n_boot == 0
    std::vector<double> derived_mean_errors;  // per atom, <C> of its strongest line
    std::vector<double> derived_std_errors;   // per atom, std of C of its strongest line
    std::size_t used = 0;
    std::size_t excluded = 0;
    bool empty = false;
};

// Model with the parameter values applied.
FitModel apply_parameters(const FitModel& model, std::span<const FitParameter> parameters,
                          std::span<const double> values);

// scale * averaged |r|^2 + offset on the given grid.
std::vector<double> evaluate_model(const FitModel& model, std::span<const double> grid);

// Per-atom cooperativity distribution implied by the model.
std::vector<CooperativityStats> model_cooperativity_stats(const FitModel& model);

FitResult fit_spectrum(const FitProblem& problem, std::span<const double> initial);

enum class BootstrapMode {
    // Refit from the best fit with the model's Monte Carlo draw unchanged.
    Residual,
    // Repeat the whole estimation: replicate b also redraws the model positions
    // with seed derive_seed(model seed, b) and restarts from best.initial. The
    // spread then includes the dependence on the Monte Carlo draw, which
    // dominates for poorly identified widths (w_x >~ a/2).
    FullProcedure
};

// Refits n_boot datasets built as model(best) + residuals resampled with replacement.
// Replicate b resamples with Rng(derive_seed(seed, b)). Non-converged refits are
// excluded; more than 20% exclusions is a NumericalError.
BootstrapResult bootstrap_uncertainty(const FitProblem& problem, const FitResult& best, std::size_t n_boot,
                                      std::uint64_t seed, BootstrapMode mode = BootstrapMode::Residual);

// Adds N(0, sigma^2) noise to every value.
Spectrum add_gaussian_noise(const Spectrum& clean, double sigma, std::uint64_t seed);

} // namespace cavqed
