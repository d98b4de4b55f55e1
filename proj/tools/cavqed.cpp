#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cavqed/detection.hpp"
#include "cavqed/errors.hpp"
#include "cavqed/fitter.hpp"
#include "cavqed/io.hpp"
#include "cavqed/mode_sampler.hpp"
#include "cavqed/oracle.hpp"
#include "cavqed/scenario.hpp"
#include "cavqed/two_atom.hpp"

#ifndef CAVQED_SCENARIO_DIR
#define CAVQED_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace cavqed;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
};

std::optional<std::uint64_t> seed_from_env() {
    const char* raw = std::getenv("CAVQED_SEED");
    if (raw == nullptr || *raw == '\0') return std::nullopt;
    const std::string_view text(raw);
    std::uint64_t value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size())
        throw UsageError("CAVQED_SEED is not an unsigned 64-bit integer: " + std::string(text));
    return value;
}

void apply_overrides(Scenario& s, const Overrides& o) {
    if (o.seed) {
        s.monte_carlo.seed = *o.seed;
        if (s.detect) s.detect->seed = *o.seed;
    }
    if (o.samples) {
        if (*o.samples == 0) throw UsageError("--samples must be positive");
        s.monte_carlo.samples = *o.samples;
        if (s.detect) s.detect->trials = *o.samples;
    }
}

class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
            file_.open(path, std::ios::binary | std::ios::trunc);
            if (!file_) throw UsageError("cannot open output file " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot open output file " + path.string());
    out << text;
}

std::string spectrum_csv(const Spectrum& s) {
    std::ostringstream out;
    write_spectrum_csv(out, s);
    return out.str();
}

json stats_json(const CooperativityStats& st) { return json{{"mean", st.mean}, {"std", st.std}}; }

json spectrum_json(const Spectrum& s) {
    json j;
    j["probe_mhz"] = s.probe();
    j["reflectivity"] = s.values();
    j["stderr"] = s.standard_error() ? *s.standard_error() : std::vector<double>(s.size(), 0.0);
    return j;
}

std::vector<AtomScenario> only_atom(const Scenario& s, std::size_t index) { return {s.atoms.at(index)}; }

AveragedSpectrum run_spectrum(const Scenario& s, std::span<const AtomScenario> atoms) {
    const auto grid = s.probe.values();
    return averaged_spectrum(grid, s.cavity, atoms, s.geometry, s.monte_carlo);
}

// Strongest line of the first atom.
const Transition& main_line(const AtomScenario& atom) {
    return *std::max_element(atom.lines.begin(), atom.lines.end(), [](const Transition& a, const Transition& b) {
        return a.cooperativity() < b.cooperativity();
    });
}

AnticrossingScenario anticrossing_scenario(const Scenario& s) {
    if (s.atoms.size() != 2) throw UsageError("an anti-crossing map needs exactly two atoms");
    return AnticrossingScenario{s.cavity, s.atoms[0], s.atoms[1], s.geometry, s.monte_carlo};
}

json gaps_json(const std::vector<GapPoint>& gaps, const HyperbolaFit& fit) {
    json rows = json::array();
    for (const auto& g : gaps) rows.push_back({{"delta_ab_mhz", g.delta_ab}, {"gap_mhz", g.gap}, {"resolved", g.resolved}});
    return json{{"gaps", rows},
                {"fitted_gap_mhz", fit.coupling},
                {"r_squared", fit.r_squared},
                {"resolved_rows", fit.points}};
}

HyperbolaFit fit_or_empty(const std::vector<GapPoint>& gaps) {
    std::size_t resolved = 0;
    for (const auto& g : gaps) resolved += g.resolved ? 1 : 0;
    if (resolved < 2) return HyperbolaFit{0.0, 0.0, resolved};
    return fit_anticrossing(gaps);
}

// ---- fit ----

struct FitRun {
    Spectrum data;
    FitProblem problem;
    FitResult result;
    BootstrapResult bootstrap;
    std::vector<CooperativityStats> derived;
};

FitRun run_fit(const Scenario& s, const fs::path& base_dir) {
    if (!s.fit) throw UsageError("scenario '" + s.name + "' has no fit section");
    const FitConfig& fc = *s.fit;
    std::optional<Spectrum> data;
    if (fc.data_csv) {
        fs::path p = *fc.data_csv;
        if (p.is_relative()) p = base_dir / p;
        std::ifstream in(p, std::ios::binary);
        if (!in) throw ConfigError("cannot read fit data " + p.string(), 0, 0);
        data = read_spectrum_csv(in);
    } else {
        const auto grid = s.probe.values();
        const auto clean = evaluate_model(s.fit_model(), grid);
        data = add_gaussian_noise(Spectrum::measured(grid, clean), fc.noise_sigma, fc.noise_seed);
    }

    std::vector<FitParameter> params;
    std::vector<double> initial;
    for (const auto& p : fc.parameters) {
        params.push_back(p.parameter);
        initial.push_back(p.initial);
    }
    FitProblem problem{*data, std::nullopt, s.fit_model(), params, FitOptions{}};
    problem.options.max_iterations = fc.max_iterations;
    FitResult result = fit_spectrum(problem, initial);
    if (!result.converged) throw NumericalError("fit did not converge in " + std::to_string(result.iterations) + " iterations");
    BootstrapResult boot = bootstrap_uncertainty(problem, result, fc.bootstrap_samples, fc.bootstrap_seed, fc.bootstrap_mode);
    auto derived = model_cooperativity_stats(apply_parameters(problem.model, params, result.values));
    return FitRun{*data, std::move(problem), std::move(result), std::move(boot), std::move(derived)};
}

std::string fit_report_csv(const FitRun& run) {
    std::ostringstream out;
    out << "quantity,value,std_error\n";
    const auto err = [&](const std::vector<double>& v, std::size_t i) {
        return v.empty() ? std::string() : format_number(v[i]);
    };
    for (std::size_t i = 0; i < run.result.names.size(); ++i)
        out << run.result.names[i] << ',' << format_number(run.result.values[i]) << ',' << err(run.bootstrap.std_errors, i)
            << '\n';
    for (std::size_t a = 0; a < run.derived.size(); ++a) {
        out << "mean_c[" << a << "]," << format_number(run.derived[a].mean) << ','
            << err(run.bootstrap.derived_mean_errors, a) << '\n';
        out << "std_c[" << a << "]," << format_number(run.derived[a].std) << ','
            << err(run.bootstrap.derived_std_errors, a) << '\n';
    }
    out << "rss," << format_number(run.result.residual_sum_squares) << ",\n";
    out << "iterations," << run.result.iterations << ",\n";
    out << "evaluations," << run.result.evaluations << ",\n";
    out << "converged," << (run.result.converged ? 1 : 0) << ",\n";
    out << "bootstrap_used," << run.bootstrap.used << ",\n";
    out << "bootstrap_excluded," << run.bootstrap.excluded << ",\n";
    return out.str();
}

json fit_report_json(const FitRun& run) {
    json params = json::array();
    for (std::size_t i = 0; i < run.result.names.size(); ++i) {
        json p{{"name", run.result.names[i]}, {"value", run.result.values[i]}};
        if (!run.bootstrap.std_errors.empty()) p["std_error"] = run.bootstrap.std_errors[i];
        params.push_back(p);
    }
    json derived = json::array();
    for (std::size_t a = 0; a < run.derived.size(); ++a) {
        json d{{"mean_c", run.derived[a].mean}, {"std_c", run.derived[a].std}};
        if (!run.bootstrap.derived_mean_errors.empty()) {
            d["mean_c_error"] = run.bootstrap.derived_mean_errors[a];
            d["std_c_error"] = run.bootstrap.derived_std_errors[a];
        }
        derived.push_back(d);
    }
    return json{{"parameters", params},
                {"derived", derived},
                {"rss", run.result.residual_sum_squares},
                {"iterations", run.result.iterations},
                {"evaluations", run.result.evaluations},
                {"converged", run.result.converged},
                {"objective_trace", run.result.objective_trace},
                {"bootstrap_used", run.bootstrap.used},
                {"bootstrap_excluded", run.bootstrap.excluded}};
}

// ---- oracle ----

struct OracleRow {
    double probe, analytic, lindblad, deviation, excited;
};

std::vector<OracleRow> run_oracle(const Scenario& s) {
    const OracleConfig oc = s.oracle.value_or(OracleConfig{});
    SystemSpec spec{s.cavity, s.motionless_emitters(), oc.fock_cutoff, oc.drive_amplitude, oc.decay};
    std::vector<OracleRow> rows;
    for (double p : linspace(s.probe.start, s.probe.stop, oc.points)) {
        const SteadyState ss = lindblad_steady_state(spec, p);
        const double analytic = reflectivity(p, s.cavity, spec.emitters);
        const double lindblad = std::norm(std::sqrt(s.cavity.kappa_wg()) * ss.field / oc.drive_amplitude - 1.0);
        rows.push_back({p, analytic, lindblad, std::abs(lindblad - analytic) / analytic, ss.excited_population});
    }
    return rows;
}

// ---- detect ----

json detect_json(const CountModel& model, const CountHistograms& h, const ClassificationReport& r) {
    const auto side = [](Hypothesis x) { return x == Hypothesis::Atom ? "atom" : "no_atom"; };
    return json{{"mean_no_atom", model.mean_without_atom()},
                {"mean_atom", model.mean_with_atom()},
                {"trials", model.trials},
                {"poisson_overlap", r.analytic_poisson.error},
                {"poisson_threshold", r.analytic_poisson.threshold.value},
                {"threshold_side", side(r.analytic_poisson.threshold.at_or_above)},
                {"normal_overlap", r.analytic_normal.error},
                {"normal_threshold", r.analytic_normal.threshold.value},
                {"empirical_error", r.empirical_error},
                {"binomial_sigma", r.binomial_sigma},
                {"misclassified_no_atom", r.misclassified_no_atom},
                {"misclassified_atom", r.misclassified_atom},
                {"histogram_no_atom", h.histogram_no_atom},
                {"histogram_atom", h.histogram_atom}};
}

std::string histogram_csv(const CountHistograms& h) {
    std::ostringstream out;
    out << "count,frequency_h0,frequency_h1\n";
    const std::size_t n = std::max(h.histogram_no_atom.size(), h.histogram_atom.size());
    for (std::size_t k = 0; k < n; ++k) {
        const auto at = [k](const std::vector<std::uint64_t>& v) { return k < v.size() ? v[k] : 0; };
        out << k << ',' << at(h.histogram_no_atom) << ',' << at(h.histogram_atom) << '\n';
    }
    return out.str();
}

// ---- reproduce ----

struct LineSummary {
    double center, fwhm, depth;
};

LineSummary single_feature(const Spectrum& s, Polarity polarity) {
    const auto f = extract_line_features(s, 1, polarity, FeatureOptions{1e-3});
    return {f[0].center, f[0].fwhm, f[0].depth};
}

json line_json(const LineSummary& l) { return json{{"center_mhz", l.center}, {"fwhm_mhz", l.fwhm}, {"depth", l.depth}}; }

void reproduce_fig1e(const Scenario& s, const fs::path& dir, const fs::path& base) {
    const auto spec = run_spectrum(s, s.atoms);
    write_text(dir / "fig1e_spectrum.csv", spectrum_csv(spec.spectrum));
    const FitRun run = run_fit(s, base);
    write_text(dir / "fig1e_data.csv", spectrum_csv(run.data));
    write_text(dir / "fig1e_fit.csv", fit_report_csv(run));
    const FitModel fitted = apply_parameters(run.problem.model, run.problem.parameters, run.result.values);
    const auto grid = s.probe.values();
    write_text(dir / "fig1e_fit_spectrum.csv", spectrum_csv(Spectrum::measured(grid, evaluate_model(fitted, grid))));
    json summary{{"scenario", s.name},
                 {"true_cooperativity", stats_json(spec.stats[0])},
                 {"fit", fit_report_json(run)}};
    write_text(dir / "fig1e_summary.json", summary.dump(2) + "\n");
}

void reproduce_fig1b(const Scenario& s, const fs::path& dir) {
    if (!s.modescan) throw UsageError("scenario '" + s.name + "' has no modescan section");
    const auto& ms = *s.modescan;
    const auto offsets = ms.offsets_um.values();
    const AtomScenario& atom = s.atoms.at(0);
    const auto points = mode_scan(offsets, ms.c_peak, s.geometry,
                                  MotionParams{atom.wx_nm, atom.wz_nm, s.monte_carlo.seed, s.monte_carlo.samples});
    std::ostringstream out;
    out << "offset_um,mean_cooperativity,stderr\n";
    for (const auto& p : points)
        out << format_number(p.offset_um) << ',' << format_number(p.mean_cooperativity) << ','
            << format_number(p.standard_error) << '\n';
    write_text(dir / (s.name + "_modescan.csv"), out.str());
}

void reproduce_fig2c(const Scenario& s, const fs::path& dir) {
    const auto one = run_spectrum(s, only_atom(s, 0));
    const auto two = run_spectrum(s, s.atoms);
    write_text(dir / "fig2c_single.csv", spectrum_csv(one.spectrum));
    write_text(dir / "fig2c_pair.csv", spectrum_csv(two.spectrum));
    const auto l1 = single_feature(one.spectrum, Polarity::Peak);
    const auto l2 = single_feature(two.spectrum, Polarity::Peak);
    json summary{{"scenario", s.name},
                 {"cooperativity", stats_json(one.stats[0])},
                 {"single_atom", line_json(l1)},
                 {"two_atoms", line_json(l2)},
                 {"fwhm_ratio", l2.fwhm / l1.fwhm}};
    write_text(dir / "fig2c_summary.json", summary.dump(2) + "\n");
}

// Averaged spectrum next to the motionless spectrum at the mean cooperativity.
void reproduce_fig3a(const Scenario& s, const fs::path& dir) {
    const auto avg = run_spectrum(s, only_atom(s, 0));
    const double c_mean = avg.stats[0].mean;
    AtomScenario fixed = s.atoms.at(0);
    const double c_main = main_line(fixed).cooperativity();
    for (auto& line : fixed.lines) line = line.with_cooperativity(line.cooperativity() * c_mean / c_main);
    fixed.wx_nm = 0.0;
    fixed.wz_nm = 0.0;
    Scenario motionless = s;
    motionless.monte_carlo.samples = 1;
    const auto single = run_spectrum(motionless, std::vector<AtomScenario>{fixed});
    write_text(dir / "fig3a_averaged.csv", spectrum_csv(avg.spectrum));
    write_text(dir / "fig3a_mean_cooperativity.csv", spectrum_csv(single.spectrum));
    const double line_at = main_line(s.atoms[0]).delta() + s.atoms[0].light_shift;
    const auto la = single_feature(avg.spectrum, Polarity::Dip);
    const auto lm = single_feature(single.spectrum, Polarity::Dip);
    json summary{{"scenario", s.name},
                 {"cooperativity", stats_json(avg.stats[0])},
                 {"averaged", line_json(la)},
                 {"averaged_shift_mhz", la.center - line_at},
                 {"mean_cooperativity_line", line_json(lm)},
                 {"mean_cooperativity_shift_mhz", lm.center - line_at},
                 {"dispersive_estimate_mhz", dispersive_shift(c_mean, s.cavity.kappa(), main_line(s.atoms[0]).gamma(),
                                                              line_at - s.cavity.delta_c())}};
    write_text(dir / "fig3a_summary.json", summary.dump(2) + "\n");
}

void reproduce_fig3c(const Scenario& s, const fs::path& dir) {
    const auto one = run_spectrum(s, only_atom(s, 0));
    const auto two = run_spectrum(s, s.atoms);
    write_text(dir / "fig3c_single.csv", spectrum_csv(one.spectrum));
    write_text(dir / "fig3c_pair.csv", spectrum_csv(two.spectrum));
    const double line_at = main_line(s.atoms[0]).delta() + s.atoms[0].light_shift;
    const auto l1 = single_feature(one.spectrum, Polarity::Dip);
    const auto l2 = single_feature(two.spectrum, Polarity::Dip);
    json summary{{"scenario", s.name},
                 {"cooperativity", stats_json(one.stats[0])},
                 {"single_atom", line_json(l1)},
                 {"two_atoms", line_json(l2)},
                 {"single_shift_mhz", l1.center - line_at},
                 {"pair_shift_mhz", l2.center - line_at},
                 {"shift_ratio", (l2.center - line_at) / (l1.center - line_at)}};
    write_text(dir / "fig3c_summary.json", summary.dump(2) + "\n");
}

void reproduce_map(const Scenario& s, const fs::path& dir) {
    if (!s.map) throw UsageError("scenario '" + s.name + "' has no map section");
    const auto probe = s.probe.values();
    const auto dab = s.map->delta_ab.values();
    const auto setup = anticrossing_scenario(s);
    const FeatureOptions opts{s.map->min_prominence};
    const auto pair = anticrossing_map(probe, dab, setup, MapMode::TwoAtom);
    const auto control = anticrossing_map(probe, dab, setup, MapMode::SingleAtomAverage);
    std::ostringstream a, b;
    write_map_csv(a, pair);
    write_map_csv(b, control);
    write_text(dir / (s.name + "_map.csv"), a.str());
    write_text(dir / (s.name + "_control_map.csv"), b.str());
    const auto g_pair = extract_gaps(pair, s.map->polarity, opts);
    const auto g_control = extract_gaps(control, s.map->polarity, opts);
    json summary{{"scenario", s.name},
                 {"two_atom", gaps_json(g_pair, fit_or_empty(g_pair))},
                 {"control", gaps_json(g_control, fit_or_empty(g_control))}};
    write_text(dir / (s.name + "_summary.json"), summary.dump(2) + "\n");
}

const std::vector<std::string> kFigures{"fig1b", "fig1e", "fig2c", "fig3a", "fig3c", "fig4"};

void reproduce(const std::string& name, const fs::path& scenario_dir, const fs::path& out_dir, const Overrides& o) {
    const fs::path path = scenario_dir / (name + ".json");
    Scenario s = load_scenario(path);
    apply_overrides(s, o);
    fs::create_directories(out_dir);
    if (name == "fig1e") reproduce_fig1e(s, out_dir, scenario_dir);
    else if (name == "fig1b") reproduce_fig1b(s, out_dir);
    else if (name == "fig2c") reproduce_fig2c(s, out_dir);
    else if (name == "fig3a") reproduce_fig3a(s, out_dir);
    else if (name == "fig3c") reproduce_fig3c(s, out_dir);
    else if (name == "fig4") reproduce_map(s, out_dir);
    else throw UsageError("unknown figure '" + name + "'");
}

Scenario load_with(const std::string& path, const Overrides& o) {
    if (path.empty()) throw UsageError("--config is required");
    Scenario s = load_scenario(path);
    apply_overrides(s, o);
    return s;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reflection spectroscopy of atoms in a nanophotonic cavity"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::string format = "csv";
    std::string scenario_dir = CAVQED_SCENARIO_DIR;
    std::vector<std::string> figures;

    const auto common = [&](CLI::App* sub, bool with_config) {
        if (with_config) sub->add_option("--config", config, "scenario file (JSON)");
        sub->add_option("--out", out, "output file (directory for reproduce)");
        sub->add_option("--seed", seed, "Monte Carlo seed, overrides the scenario and CAVQED_SEED");
        sub->add_option("--samples", samples, "Monte Carlo samples (trials for detect)");
        sub->add_option("--format", format, "output format")->check(CLI::IsMember({"csv", "json"}));
    };
    std::map<std::string, CLI::App*> subs;
    for (const char* name : {"spectrum", "map", "modescan", "fit", "oracle", "detect"}) {
        subs[name] = app.add_subcommand(name);
        common(subs[name], true);
    }
    subs["spectrum"]->description("Monte Carlo averaged reflection spectrum");
    subs["map"]->description("two-atom anti-crossing map");
    subs["modescan"]->description("mean cooperativity versus tweezer offset");
    subs["fit"]->description("fit cooperativities and motion widths to a spectrum");
    subs["oracle"]->description("analytic reflectivity against the master-equation steady state");
    subs["detect"]->description("photon-count histograms and detection overlap");
    auto* repro = app.add_subcommand("reproduce", "run bundled figure scenarios");
    common(repro, false);
    repro->add_option("figures", figures, "figures to run (default: all)")->check(CLI::IsMember(kFigures));
    repro->add_option("--scenarios", scenario_dir, "directory with the bundled scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        Overrides o;
        o.seed = seed ? seed : seed_from_env();
        o.samples = samples;
        const bool as_json = format == "json";

        if (repro->parsed()) {
            const fs::path dir = out.empty() ? fs::path("results") : fs::path(out);
            const auto list = figures.empty() ? std::vector<std::string>{"fig1e", "fig2c", "fig3a", "fig3c", "fig4"} : figures;
            for (const auto& name : list) {
                reproduce(name, scenario_dir, dir, o);
                std::cerr << name << ": done\n";
            }
            return 0;
        }

        Scenario s = load_with(config, o);
        Output output(out);
        std::ostream& os = output.stream();

        if (subs["spectrum"]->parsed()) {
            const auto r = run_spectrum(s, s.atoms);
            if (as_json) {
                json j = spectrum_json(r.spectrum);
                json st = json::array();
                for (const auto& x : r.stats) st.push_back(stats_json(x));
                j["cooperativity"] = st;
                os << j.dump(2) << '\n';
            } else {
                write_spectrum_csv(os, r.spectrum);
            }
        } else if (subs["map"]->parsed()) {
            if (!s.map) throw UsageError("scenario has no map section");
            const auto probe = s.probe.values();
            const auto dab = s.map->delta_ab.values();
            const auto m = anticrossing_map(probe, dab, anticrossing_scenario(s), s.map->mode);
            if (as_json) {
                const auto gaps = extract_gaps(m, s.map->polarity, FeatureOptions{s.map->min_prominence});
                json j{{"probe_mhz", m.probe}, {"delta_ab_mhz", m.delta_ab}, {"reflectivity", m.values}};
                j["anticrossing"] = gaps_json(gaps, fit_or_empty(gaps));
                os << j.dump(2) << '\n';
            } else {
                write_map_csv(os, m);
            }
        } else if (subs["modescan"]->parsed()) {
            if (!s.modescan) throw UsageError("scenario has no modescan section");
            const auto offsets = s.modescan->offsets_um.values();
            const AtomScenario& atom = s.atoms.at(0);
            const auto pts = mode_scan(offsets, s.modescan->c_peak, s.geometry,
                                       MotionParams{atom.wx_nm, atom.wz_nm, s.monte_carlo.seed, s.monte_carlo.samples});
            if (as_json) {
                json rows = json::array();
                for (const auto& p : pts)
                    rows.push_back({{"offset_um", p.offset_um}, {"mean_cooperativity", p.mean_cooperativity},
                                    {"stderr", p.standard_error}});
                os << rows.dump(2) << '\n';
            } else {
                os << "offset_um,mean_cooperativity,stderr\n";
                for (const auto& p : pts)
                    os << format_number(p.offset_um) << ',' << format_number(p.mean_cooperativity) << ','
                       << format_number(p.standard_error) << '\n';
            }
        } else if (subs["fit"]->parsed()) {
            const FitRun run = run_fit(s, fs::path(config).parent_path());
            if (as_json) os << fit_report_json(run).dump(2) << '\n';
            else os << fit_report_csv(run);
        } else if (subs["oracle"]->parsed()) {
            const auto rows = run_oracle(s);
            double worst = 0.0, max_excited = 0.0;
            for (const auto& r : rows) {
                worst = std::max(worst, r.deviation);
                max_excited = std::max(max_excited, r.excited);
            }
            if (as_json) {
                json table = json::array();
                for (const auto& r : rows)
                    table.push_back({{"probe_mhz", r.probe}, {"analytic", r.analytic}, {"lindblad", r.lindblad},
                                     {"relative_deviation", r.deviation}, {"excited_population", r.excited}});
                os << json{{"rows", table}, {"max_relative_deviation", worst}, {"max_excited_population", max_excited}}
                          .dump(2)
                   << '\n';
            } else {
                os << "probe_mhz,analytic,lindblad,relative_deviation,excited_population\n";
                for (const auto& r : rows)
                    os << format_number(r.probe) << ',' << format_number(r.analytic) << ',' << format_number(r.lindblad)
                       << ',' << format_number(r.deviation) << ',' << format_number(r.excited) << '\n';
            }
            std::cerr << "max relative deviation " << format_number(worst) << '\n';
        } else if (subs["detect"]->parsed()) {
            const CountModel model = s.detect.value_or(CountModel{});
            model.validate();
            const auto h = simulate_count_histograms(model);
            const auto r = classification_report(model, h);
            if (as_json) os << detect_json(model, h, r).dump(2) << '\n';
            else os << histogram_csv(h);
            std::cerr << "overlap " << format_number(r.analytic_normal.error) << " (normal), "
                      << format_number(r.analytic_poisson.error) << " (poisson), empirical "
                      << format_number(r.empirical_error) << '\n';
        }
        os.flush();
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kExitConfig;
    } catch (const FeatureError& e) {
        std::cerr << "feature extraction failed: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}
