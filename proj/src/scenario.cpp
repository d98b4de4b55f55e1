#include "cavqed/scenario.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cavqed/errors.hpp"

namespace cavqed {

using nlohmann::json;

std::pair<int, int> line_column(std::string_view text, std::size_t offset) {
    int line = 1, column = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

namespace {

// Records the byte offset of every member key and array element by JSON
// pointer. Only used to place validation errors; the text is already known
// to be well-formed JSON.
class OffsetIndex {
public:
    explicit OffsetIndex(std::string_view text) : text_(text) {
        skip_ws();
        value("");
    }

    std::size_t find(const std::string& pointer) const {
        std::string p = pointer;
        while (true) {
            if (auto it = offsets_.find(p); it != offsets_.end()) return it->second;
            const auto slash = p.find_last_of('/');
            if (slash == std::string::npos || p.empty()) return 0;
            p = p.substr(0, slash);
        }
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    std::string string() {
        std::string out;
        ++pos_; // opening quote
        while (pos_ < text_.size() && text_[pos_] != '"') {
            if (text_[pos_] == '\\') {
                out += text_[pos_++];
            }
            if (pos_ < text_.size()) out += text_[pos_++];
        }
        ++pos_;
        return out;
    }

    void value(const std::string& pointer) {
        skip_ws();
        if (pos_ >= text_.size()) return;
        const char c = text_[pos_];
        if (c == '{') {
            ++pos_;
            skip_ws();
            while (pos_ < text_.size() && text_[pos_] != '}') {
                const std::size_t key_at = pos_;
                const std::string key = string();
                offsets_.emplace(pointer + "/" + key, key_at);
                skip_ws();
                ++pos_; // ':'
                value(pointer + "/" + key);
                skip_ws();
                if (pos_ < text_.size() && text_[pos_] == ',') ++pos_;
                skip_ws();
            }
            ++pos_;
        } else if (c == '[') {
            ++pos_;
            skip_ws();
            std::size_t index = 0;
            while (pos_ < text_.size() && text_[pos_] != ']') {
                offsets_.emplace(pointer + "/" + std::to_string(index), pos_);
                value(pointer + "/" + std::to_string(index++));
                skip_ws();
                if (pos_ < text_.size() && text_[pos_] == ',') ++pos_;
                skip_ws();
            }
            ++pos_;
        } else if (c == '"') {
            string();
        } else {
            while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != '}' && text_[pos_] != ']' &&
                   !std::isspace(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::map<std::string, std::size_t> offsets_;
};

struct SchemaError {
    std::string pointer;
    std::string message;
};

// Typed, path-aware view of one JSON object that rejects unknown keys.
class Section {
public:
    Section(const json& node, std::string pointer, std::set<std::string> allowed)
        : node_(node), pointer_(std::move(pointer)) {
        if (!node_.is_object()) throw SchemaError{pointer_, "expected an object"};
        for (const auto& [key, unused] : node_.items()) {
            if (!allowed.contains(key)) throw SchemaError{pointer_ + "/" + key, "unknown key '" + key + "'"};
        }
    }

    bool has(const std::string& key) const { return node_.contains(key) && !node_.at(key).is_null(); }

    const json& raw(const std::string& key) const {
        if (!node_.contains(key)) throw SchemaError{pointer_, "missing required key '" + key + "'"};
        return node_.at(key);
    }

    std::string path(const std::string& key) const { return pointer_ + "/" + key; }

    double number(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_number()) throw SchemaError{path(key), "'" + key + "' must be a number"};
        return v.get<double>();
    }

    double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::uint64_t unsigned_integer(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
            throw SchemaError{path(key), "'" + key + "' must be a non-negative integer"};
        return v.get<std::uint64_t>();
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const {
        return has(key) ? unsigned_integer(key) : fallback;
    }

    std::string text(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_string()) throw SchemaError{path(key), "'" + key + "' must be a string"};
        return v.get<std::string>();
    }

    Section object(const std::string& key, std::set<std::string> allowed) const {
        return Section(raw(key), path(key), std::move(allowed));
    }

    const json& array(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_array()) throw SchemaError{path(key), "'" + key + "' must be an array"};
        return v;
    }

private:
    const json& node_;
    std::string pointer_;
};

template <typename F>
auto checked(const std::string& pointer, F&& make) {
    try {
        return make();
    } catch (const DomainError& e) {
        throw SchemaError{pointer, e.what()};
    } catch (const UsageError& e) {
        throw SchemaError{pointer, e.what()};
    }
}

GridConfig grid(const Section& s, const std::string& start, const std::string& stop, const std::string& points) {
    GridConfig g{s.number(start), s.number(stop), s.unsigned_integer(points)};
    if (g.points < 1) throw SchemaError{s.path(points), "'" + points + "' must be at least 1"};
    if (g.points > 1 && !(g.stop > g.start))
        throw SchemaError{s.path(stop), "'" + stop + "' must exceed '" + start + "'"};
    return g;
}

AtomScenario atom(const json& node, const std::string& pointer) {
    Section s(node, pointer, {"lines", "light_shift_mhz", "light_shift_jitter_mhz", "offset_um", "motion"});
    AtomScenario out;
    out.light_shift = s.number("light_shift_mhz", 0.0);
    out.light_shift_jitter = s.number("light_shift_jitter_mhz", 0.0);
    if (out.light_shift_jitter < 0.0)
        throw SchemaError{s.path("light_shift_jitter_mhz"), "light-shift jitter must be non-negative"};
    out.offset_um = s.number("offset_um", 0.0);
    if (s.has("motion")) {
        Section m = s.object("motion", {"wx_nm", "wz_nm"});
        out.wx_nm = m.number("wx_nm");
        out.wz_nm = m.number("wz_nm");
        if (out.wx_nm < 0.0) throw SchemaError{m.path("wx_nm"), "'wx_nm' must be non-negative"};
        if (out.wz_nm < 0.0) throw SchemaError{m.path("wz_nm"), "'wz_nm' must be non-negative"};
    }
    const json& lines = s.array("lines");
    bool any_occupancy = false;
    std::vector<double> occupancy;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string lp = s.path("lines") + "/" + std::to_string(i);
        Section l(lines[i], lp, {"delta_mhz", "gamma_mhz", "c0", "occupancy"});
        const double delta = l.number("delta_mhz");
        const double gamma = l.number("gamma_mhz");
        const double c0 = l.number("c0");
        if (!(gamma > 0.0)) throw SchemaError{l.path("gamma_mhz"), "'gamma_mhz' must be positive"};
        if (c0 < 0.0) throw SchemaError{l.path("c0"), "'c0' must be non-negative"};
        out.lines.push_back(checked(lp, [&] { return Transition::from_cooperativity(delta, gamma, c0); }));
        const double eta = l.number("occupancy", 1.0);
        if (!(eta >= 0.0 && eta <= 1.0)) throw SchemaError{l.path("occupancy"), "'occupancy' must lie in [0, 1]"};
        any_occupancy = any_occupancy || l.has("occupancy");
        occupancy.push_back(eta);
    }
    if (any_occupancy) out.line_occupancy = occupancy;
    return out;
}

FitParameterConfig fit_parameter(const json& node, const std::string& pointer, const Scenario& scenario) {
    Section s(node, pointer, {"name", "atom", "line", "lower", "upper", "initial"});
    static const std::map<std::string, ParameterKind> kinds{
        {"c0", ParameterKind::LineC0},          {"g0_mhz", ParameterKind::LineRabi},
        {"occupancy", ParameterKind::LineOccupancy}, {"wx_nm", ParameterKind::Wx},
        {"wz_nm", ParameterKind::Wz},           {"delta_c_mhz", ParameterKind::CavityDetuning},
        {"scale", ParameterKind::Scale},        {"offset", ParameterKind::Offset}};
    const std::string name = s.text("name");
    const auto it = kinds.find(name);
    if (it == kinds.end()) throw SchemaError{s.path("name"), "unknown fit parameter '" + name + "'"};
    FitParameterConfig out{{it->second, s.number("lower"), s.number("upper"), s.unsigned_integer("atom", 0),
                            s.unsigned_integer("line", 0)},
                           s.number("initial")};
    const auto& p = out.parameter;
    if (!(p.upper > p.lower)) throw SchemaError{s.path("upper"), "'upper' must exceed 'lower'"};
    if (!(out.initial >= p.lower && out.initial <= p.upper))
        throw SchemaError{s.path("initial"), "'initial' must lie within the bounds"};
    const bool per_line = p.kind == ParameterKind::LineC0 || p.kind == ParameterKind::LineRabi ||
                          p.kind == ParameterKind::LineOccupancy;
    if (per_line) {
        if (p.atom >= scenario.atoms.size()) throw SchemaError{s.path("atom"), "atom index out of range"};
        if (p.line >= scenario.atoms[p.atom].lines.size()) throw SchemaError{s.path("line"), "line index out of range"};
    }
    return out;
}

Scenario build(const json& doc) {
    Section root(doc, "", {"name", "cavity", "atoms", "geometry", "probe", "monte_carlo", "map", "modescan", "fit",
                           "oracle", "detect"});
    Scenario sc;
    sc.name = root.has("name") ? root.text("name") : "scenario";

    {
        Section c = root.object("cavity", {"kappa_wg_mhz", "kappa_sc_mhz", "delta_c_mhz"});
        const double kwg = c.number("kappa_wg_mhz");
        const double ksc = c.number("kappa_sc_mhz");
        const double dc = c.number("delta_c_mhz", 0.0);
        sc.cavity = checked("/cavity", [&] { return CavityParams(kwg, ksc, dc); });
    }
    {
        const json& atoms = root.array("atoms");
        for (std::size_t i = 0; i < atoms.size(); ++i) sc.atoms.push_back(atom(atoms[i], "/atoms/" + std::to_string(i)));
    }
    {
        Section g = root.object("geometry", {"a_nm", "z0_nm", "envelope_um"});
        sc.geometry.a_nm = g.number("a_nm");
        sc.geometry.z0_nm = g.number("z0_nm");
        if (g.has("envelope_um")) sc.geometry.envelope_um = g.number("envelope_um");
        checked("/geometry", [&] {
            sc.geometry.validate();
            return 0;
        });
    }
    {
        Section p = root.object("probe", {"start_mhz", "stop_mhz", "points"});
        sc.probe = grid(p, "start_mhz", "stop_mhz", "points");
    }
    {
        Section m = root.object("monte_carlo", {"samples", "seed"});
        sc.monte_carlo.samples = m.unsigned_integer("samples");
        sc.monte_carlo.seed = m.unsigned_integer("seed");
        if (sc.monte_carlo.samples < 1) throw SchemaError{m.path("samples"), "'samples' must be at least 1"};
    }
    if (root.has("map")) {
        Section m = root.object("map", {"delta_ab_start_mhz", "delta_ab_stop_mhz", "delta_ab_points", "mode",
                                        "polarity", "min_prominence"});
        MapConfig cfg;
        cfg.delta_ab = grid(m, "delta_ab_start_mhz", "delta_ab_stop_mhz", "delta_ab_points");
        if (m.has("mode")) {
            const std::string mode = m.text("mode");
            if (mode == "two_atom") cfg.mode = MapMode::TwoAtom;
            else if (mode == "single_atom_average") cfg.mode = MapMode::SingleAtomAverage;
            else throw SchemaError{m.path("mode"), "'mode' must be 'two_atom' or 'single_atom_average'"};
        }
        if (m.has("polarity")) {
            const std::string pol = m.text("polarity");
            if (pol == "dip") cfg.polarity = Polarity::Dip;
            else if (pol == "peak") cfg.polarity = Polarity::Peak;
            else throw SchemaError{m.path("polarity"), "'polarity' must be 'dip' or 'peak'"};
        }
        cfg.min_prominence = m.number("min_prominence", cfg.min_prominence);
        if (sc.atoms.size() != 2) throw SchemaError{"/atoms", "a map scenario needs exactly two atoms"};
        sc.map = cfg;
    }
    if (root.has("modescan")) {
        Section m = root.object("modescan", {"start_um", "stop_um", "points", "c_peak"});
        sc.modescan = ModeScanConfig{grid(m, "start_um", "stop_um", "points"), m.number("c_peak")};
        if (!sc.geometry.envelope_um) throw SchemaError{"/geometry/envelope_um", "mode scan requires 'envelope_um'"};
    }
    if (root.has("fit")) {
        Section f = root.object("fit", {"data_csv", "noise_sigma", "noise_seed", "parameters", "bootstrap_samples",
                                        "bootstrap_seed", "bootstrap_mode", "max_iterations"});
        FitConfig cfg;
        if (f.has("data_csv")) cfg.data_csv = f.text("data_csv");
        cfg.noise_sigma = f.number("noise_sigma", 0.0);
        if (cfg.noise_sigma < 0.0) throw SchemaError{f.path("noise_sigma"), "'noise_sigma' must be non-negative"};
        cfg.noise_seed = f.unsigned_integer("noise_seed", 0);
        cfg.bootstrap_samples = f.unsigned_integer("bootstrap_samples", 0);
        cfg.bootstrap_seed = f.unsigned_integer("bootstrap_seed", 0);
        if (f.has("bootstrap_mode")) {
            const std::string mode = f.text("bootstrap_mode");
            if (mode == "residual") cfg.bootstrap_mode = BootstrapMode::Residual;
            else if (mode == "full_procedure") cfg.bootstrap_mode = BootstrapMode::FullProcedure;
            else throw SchemaError{f.path("bootstrap_mode"), "'bootstrap_mode' must be 'residual' or 'full_procedure'"};
        }
        cfg.max_iterations = f.unsigned_integer("max_iterations", 500);
        const json& params = f.array("parameters");
        if (params.empty()) throw SchemaError{f.path("parameters"), "at least one fit parameter is required"};
        for (std::size_t i = 0; i < params.size(); ++i)
            cfg.parameters.push_back(fit_parameter(params[i], f.path("parameters") + "/" + std::to_string(i), sc));
        sc.fit = cfg;
    }
    if (root.has("oracle")) {
        Section o = root.object("oracle", {"fock_cutoff", "drive_amplitude", "points", "decay"});
        OracleConfig cfg;
        cfg.fock_cutoff = static_cast<int>(o.unsigned_integer("fock_cutoff", 3));
        if (cfg.fock_cutoff < 1) throw SchemaError{o.path("fock_cutoff"), "'fock_cutoff' must be at least 1"};
        cfg.drive_amplitude = o.number("drive_amplitude", cfg.drive_amplitude);
        if (!(cfg.drive_amplitude > 0.0))
            throw SchemaError{o.path("drive_amplitude"), "'drive_amplitude' must be positive"};
        cfg.points = o.unsigned_integer("points", cfg.points);
        if (cfg.points < 1) throw SchemaError{o.path("points"), "'points' must be at least 1"};
        if (o.has("decay")) {
            const std::string decay = o.text("decay");
            if (decay == "individual") cfg.decay = DecayModel::Individual;
            else if (decay == "cumulative") cfg.decay = DecayModel::Cumulative;
            else throw SchemaError{o.path("decay"), "'decay' must be 'individual' or 'cumulative'"};
        }
        sc.oracle = cfg;
    }
    if (root.has("detect")) {
        Section d = root.object("detect", {"rate_with_atom_per_us", "rate_without_atom_per_us", "window_us",
                                           "trials", "seed"});
        CountModel m;
        m.rate_with_atom = d.number("rate_with_atom_per_us", m.rate_with_atom);
        m.rate_without_atom = d.number("rate_without_atom_per_us", m.rate_without_atom);
        m.window_us = d.number("window_us", m.window_us);
        m.trials = d.unsigned_integer("trials", m.trials);
        m.seed = d.unsigned_integer("seed", m.seed);
        checked("/detect", [&] {
            m.validate();
            return 0;
        });
        sc.detect = m;
    }
    return sc;
}

} // namespace

EmitterSet Scenario::motionless_emitters() const {
    EmitterSet set;
    for (const auto& a : atoms) set.add_atom(a.light_shift, a.lines);
    return set;
}

FitModel Scenario::fit_model() const {
    return FitModel{cavity, atoms, geometry, monte_carlo, 1.0, 0.0};
}

Scenario parse_scenario(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
        const auto [line, column] = line_column(text, offset);
        throw ConfigError("syntax error at line " + std::to_string(line) + ", column " + std::to_string(column) +
                              ": " + e.what(),
                          line, column);
    }
    try {
        return build(doc);
    } catch (const SchemaError& e) {
        const OffsetIndex index(text);
        const auto [line, column] = line_column(text, index.find(e.pointer));
        const std::string where = e.pointer.empty() ? "/" : e.pointer;
        throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(column) + " (" + where +
                              "): " + e.message,
                          line, column);
    }
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open scenario file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

} // namespace cavqed
