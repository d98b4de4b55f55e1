#pragma once

// Scenario documents (JSON) for the command-line runners.
//
// Every key carries its unit as a suffix; unknown keys are rejected. Errors
// are reported as ConfigError with the line and column of the offending
// token in the source text.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cavqed/detection.hpp"
#include "cavqed/fitter.hpp"
#include "cavqed/mode_sampler.hpp"
#include "cavqed/oracle.hpp"
#include "cavqed/qed_core.hpp"
#include "cavqed/two_atom.hpp"

namespace cavqed {

struct GridConfig {
    double start = 0.0;
    double stop = 0.0;
    std::size_t points = 1;

    std::vector<double> values() const { return linspace(start, stop, points); }
};

struct MapConfig {
    GridConfig delta_ab;
    MapMode mode = MapMode::TwoAtom;
    Polarity polarity = Polarity::Dip;
    double min_prominence = 1e-3;
};

struct ModeScanConfig {
    GridConfig offsets_um;
    double c_peak = 0.0;
};

struct FitParameterConfig {
    FitParameter parameter;
    double initial;
};

struct FitConfig {
    std::optional<std::string> data_csv; // synthesise from the scenario when absent
    double noise_sigma = 0.0;
    std::uint64_t noise_seed = 0;
    std::vector<FitParameterConfig> parameters;
    std::size_t bootstrap_samples = 0;
    std::uint64_t bootstrap_seed = 0;
    BootstrapMode bootstrap_mode = BootstrapMode::Residual;
    std::size_t max_iterations = 500;
};

struct OracleConfig {
    int fock_cutoff = 3;
    double drive_amplitude = 0.5;
    std::size_t points = 41;
    DecayModel decay = DecayModel::Individual;
};

struct Scenario {
    std::string name;
    CavityParams cavity{860.0, 2770.0, 0.0};
    std::vector<AtomScenario> atoms;
    ModeGeometry geometry;
    GridConfig probe;
    MonteCarloConfig monte_carlo;
    std::optional<MapConfig> map;
    std::optional<ModeScanConfig> modescan;
    std::optional<FitConfig> fit;
    std::optional<OracleConfig> oracle;
    std::optional<CountModel> detect;

    // Emitters with every atom at its trap centre and its configured light shift.
    EmitterSet motionless_emitters() const;
    FitModel fit_model() const;
};

Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

// 1-based line and column of a byte offset.
std::pair<int, int> line_column(std::string_view text, std::size_t offset);

} // namespace cavqed
