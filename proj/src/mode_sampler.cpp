#include "cavqed/mode_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cavqed/errors.hpp"
#include "cavqed/parallel.hpp"
#include "cavqed/random.hpp"

namespace cavqed {

namespace {

constexpr double kBoltzmann = 1.380649e-23;     // J/K
constexpr double kAtomicMass = 1.66053906660e-27; // kg

double envelope_factor(double x_um, const ModeGeometry& geom) {
    if (!geom.envelope_um) return 1.0;
    const double l = *geom.envelope_um;
    return std::exp(-4.0 * x_um * x_um / (l * l));
}

double lattice_factor(double x_nm, double z_nm, const ModeGeometry& geom) {
    const double c = std::cos(std::numbers::pi * x_nm / geom.a_nm);
    return c * c * std::exp(-2.0 * z_nm / geom.z0_nm);
}

struct LineSample {
    double g2;
    double center;
    double half_gamma;
};

} // namespace

void ModeGeometry::validate() const {
    if (!(a_nm > 0.0) || !std::isfinite(a_nm)) throw DomainError("lattice constant must be positive");
    if (!(z0_nm > 0.0) || !std::isfinite(z0_nm)) throw DomainError("evanescent decay length must be positive");
    if (envelope_um && !(*envelope_um > 0.0)) throw DomainError("envelope length must be positive");
}

void MotionParams::validate() const {
    if (!(wx_nm >= 0.0) || !(wz_nm >= 0.0) || !std::isfinite(wx_nm) || !std::isfinite(wz_nm))
        throw DomainError("motion widths must be finite and non-negative");
    if (n_samples < 1) throw UsageError("at least one Monte Carlo sample is required");
}

double mode_factor(double x_nm, double z_nm, const ModeGeometry& geom) {
    return lattice_factor(x_nm, z_nm, geom) * envelope_factor(x_nm * 1e-3, geom);
}

double displaced_mode_factor(const Position& pos, double offset_um, const ModeGeometry& geom) {
    return lattice_factor(pos.x_nm, pos.z_nm, geom) * envelope_factor(offset_um + pos.x_nm * 1e-3, geom);
}

double local_cooperativity(double x_nm, double z_nm, double c0, const ModeGeometry& geom) {
    geom.validate();
    return c0 * mode_factor(x_nm, z_nm, geom);
}

double evanescent_rabi(double g_surface, double z_nm, double z0_nm) {
    if (z_nm < 0.0) throw DomainError("distance from the surface must be non-negative");
    if (!(z0_nm > 0.0)) throw DomainError("evanescent decay length must be positive");
    return g_surface * std::exp(-z_nm / z0_nm);
}

double thermal_sigma(double temperature_uk, double trap_freq_khz, double mass_amu) {
    if (!(trap_freq_khz > 0.0)) throw DomainError("trap frequency must be positive");
    if (temperature_uk < 0.0) throw DomainError("temperature must be non-negative");
    if (!(mass_amu > 0.0)) throw DomainError("mass must be positive");
    const double omega = 2.0 * std::numbers::pi * trap_freq_khz * 1e3;
    const double mass = mass_amu * kAtomicMass;
    const double sigma_m = std::sqrt(kBoltzmann * temperature_uk * 1e-6 / (mass * omega * omega));
    return sigma_m * 1e9;
}

std::vector<Position> sample_positions(const MotionParams& motion) {
    motion.validate();
    Rng rng(motion.seed);
    std::vector<Position> out(motion.n_samples);
    for (auto& p : out) {
        const double ux = rng.normal();
        const double uz = rng.normal();
        p = {motion.wx_nm * ux, motion.wz_nm * uz};
    }
    return out;
}

ClosedFormMean mean_cooperativity_closed_form(double c0, const MotionParams& motion, const ModeGeometry& geom) {
    geom.validate();
    motion.validate();
    const double kx = std::numbers::pi * motion.wx_nm / geom.a_nm;
    const double lattice = 0.5 * (1.0 + std::exp(-2.0 * kx * kx));
    const double rz = motion.wz_nm / geom.z0_nm;
    const double evanescent = std::exp(2.0 * rz * rz);
    return {c0 * lattice * evanescent, !geom.envelope_um.has_value()};
}

CooperativityStats cooperativity_stats(std::span<const double> samples, std::size_t bins) {
    if (samples.empty()) throw UsageError("no cooperativity samples");
    if (bins == 0) throw UsageError("histogram needs at least one bin");
    CooperativityStats stats;
    const double n = static_cast<double>(samples.size());
    stats.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    if (samples.size() > 1) {
        double ss = 0.0;
        for (double c : samples) ss += (c - stats.mean) * (c - stats.mean);
        stats.std = std::sqrt(ss / (n - 1.0));
    }
    const double hi = std::max(*std::max_element(samples.begin(), samples.end()), 0.0);
    const double width = hi > 0.0 ? hi / static_cast<double>(bins) : 1.0;
    auto& h = stats.histogram;
    h.edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = width * static_cast<double>(b);
    h.counts.assign(bins, 0);
    for (double c : samples) {
        auto b = static_cast<std::size_t>(std::max(c, 0.0) / width);
        h.counts[std::min(b, bins - 1)] += 1;
    }
    return stats;
}

AveragedSpectrum averaged_spectrum(std::span<const double> grid, const CavityParams& cavity,
                                   std::span<const AtomScenario> atoms, const ModeGeometry& geom,
                                   const MonteCarloConfig& mc) {
    geom.validate();
    if (mc.samples < 1) throw UsageError("at least one Monte Carlo sample is required");
    std::vector<double> probe(grid.begin(), grid.end());
    if (probe.empty()) throw UsageError("spectrum grid is empty");

    const std::size_t n = mc.samples;
    std::size_t line_total = 0;
    for (const auto& atom : atoms) {
        if (!atom.line_occupancy.empty() && atom.line_occupancy.size() != atom.lines.size())
            throw UsageError("line occupancy must list one value per line");
        for (double eta : atom.line_occupancy)
            if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("line occupancy must lie in [0, 1]");
        if (!(atom.light_shift_jitter >= 0.0)) throw DomainError("light-shift jitter must be non-negative");
        line_total += atom.lines.size();
    }

    const double kappa = cavity.kappa();
    // samples x lines table of couplings and line centres.
    std::vector<LineSample> table(n * line_total);
    std::vector<double> optional_eta;
    std::vector<std::size_t> optional_index;
    AveragedSpectrum result{Spectrum({0.0}, {0.0}), {}};
    result.stats.reserve(atoms.size());

    std::size_t column = 0;
    for (std::size_t a = 0; a < atoms.size(); ++a) {
        const auto& atom = atoms[a];
        const auto positions = sample_positions({atom.wx_nm, atom.wz_nm, derive_seed(mc.seed, 2 * a), n});
        Rng jitter(derive_seed(mc.seed, 2 * a + 1));
        double strongest = 0.0;
        for (const auto& line : atom.lines) strongest = std::max(strongest, line.cooperativity());

        std::vector<double> cooperativities(n);
        for (std::size_t s = 0; s < n; ++s) {
            const auto& pos = positions[s];
            const double f = displaced_mode_factor(pos, atom.offset_um, geom);
            const double shift = atom.light_shift +
                                 (atom.light_shift_jitter > 0.0 ? atom.light_shift_jitter * jitter.normal() : 0.0);
            cooperativities[s] = strongest * f;
            for (std::size_t l = 0; l < atom.lines.size(); ++l) {
                const auto& line = atom.lines[l];
                table[s * line_total + column + l] = {0.25 * line.cooperativity() * f * kappa * line.gamma(),
                                                      line.delta() + shift, 0.5 * line.gamma()};
            }
        }
        for (std::size_t l = 0; l < atom.lines.size(); ++l) {
            if (!atom.line_occupancy.empty() && atom.line_occupancy[l] < 1.0) {
                optional_eta.push_back(atom.line_occupancy[l]);
                optional_index.push_back(column + l);
            }
        }
        column += atom.lines.size();
        result.stats.push_back(cooperativity_stats(cooperativities));
    }

    // Mixture over presence of lines with occupancy < 1.
    struct Config {
        double weight;
        std::vector<char> active;
    };
    std::vector<Config> configs;
    const std::size_t k = optional_index.size();
    if (k > 16) throw UsageError("too many partially occupied lines");
    for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
        Config cfg{1.0, std::vector<char>(line_total, 1)};
        for (std::size_t j = 0; j < k; ++j) {
            const bool present = (mask >> j) & 1U;
            cfg.weight *= present ? optional_eta[j] : 1.0 - optional_eta[j];
            cfg.active[optional_index[j]] = present ? 1 : 0;
        }
        if (cfg.weight > 0.0) configs.push_back(std::move(cfg));
    }

    const double kwg = cavity.kappa_wg();
    std::vector<double> values(probe.size());
    std::vector<double> errors(probe.size());
    parallel_for(probe.size(), [&](std::size_t i) {
        const double p = probe[i];
        const double cavity_im = -(p - cavity.delta_c());
        double sum = 0.0;
        double sum_sq = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            const LineSample* row = table.data() + s * line_total;
            double value = 0.0;
            for (const auto& cfg : configs) {
                double re = 0.5 * kappa;
                double im = cavity_im;
                for (std::size_t l = 0; l < line_total; ++l) {
                    if (!cfg.active[l]) continue;
                    const double d = p - row[l].center;
                    const double scale = row[l].g2 / (row[l].half_gamma * row[l].half_gamma + d * d);
                    re += scale * row[l].half_gamma;
                    im += scale * d;
                }
                const double loss = kwg * (2.0 * re - kwg) / (re * re + im * im);
                value += cfg.weight * std::clamp(1.0 - loss, 0.0, 1.0);
            }
            sum += value;
            sum_sq += value * value;
        }
        const double mean = sum / static_cast<double>(n);
        values[i] = std::clamp(mean, 0.0, 1.0);
        if (n > 1) {
            const double var = std::max(0.0, (sum_sq - sum * mean) / static_cast<double>(n - 1));
            errors[i] = std::sqrt(var / static_cast<double>(n));
        }
    });

    result.spectrum = Spectrum(std::move(probe), std::move(values), std::move(errors));
    return result;
}

std::vector<ModeScanPoint> mode_scan(std::span<const double> offsets_um, double c_peak,
                                     const ModeGeometry& geom, const MotionParams& motion) {
    geom.validate();
    if (!geom.envelope_um) throw UsageError("mode scan requires an envelope length");
    const auto positions = sample_positions(motion);
    const double n = static_cast<double>(positions.size());
    std::vector<ModeScanPoint> out;
    out.reserve(offsets_um.size());
    for (double offset : offsets_um) {
        double sum = 0.0;
        double sum_sq = 0.0;
        for (const auto& pos : positions) {
            const double c = c_peak * displaced_mode_factor(pos, offset, geom);
            sum += c;
            sum_sq += c * c;
        }
        const double mean = sum / n;
        const double var = positions.size() > 1 ? std::max(0.0, (sum_sq - sum * mean) / (n - 1.0)) : 0.0;
        out.push_back({offset, mean, std::sqrt(var / n)});
    }
    return out;
}

} // namespace cavqed
