#include "cavqed/two_atom.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cavqed/errors.hpp"
#include "cavqed/random.hpp"

namespace cavqed {

DressedPair dressed_frequencies(double delta_a, double delta_b, double coupling_j) {
    if (coupling_j < 0.0) throw DomainError("exchange coupling J must be non-negative");
    const double p = delta_a + coupling_j;
    const double q = delta_b + coupling_j;
    const double mean = 0.5 * (p + q);
    const double half = std::hypot(coupling_j, 0.5 * (p - q));
    // Rotation angle of the upper eigenvector: tan(2 theta) = 2J / (p - q).
    const double theta = 0.5 * std::atan2(2.0 * coupling_j, p - q);
    const std::array<double, 2> upper{std::cos(theta), std::sin(theta)};
    const std::array<double, 2> lower{-std::sin(theta), std::cos(theta)};
    auto weight = [](const std::array<double, 2>& v) { return 0.5 * (v[0] + v[1]) * (v[0] + v[1]); };
    DressedPair out;
    out.frequencies = {mean - half, mean + half};
    out.vectors = {lower, upper};
    out.cavity_weights = {weight(lower), weight(upper)};
    return out;
}

double anticrossing_splitting(double coupling_j, double delta_ab) {
    return std::hypot(2.0 * coupling_j, delta_ab);
}

namespace {

struct Candidate {
    std::size_t index;
    double prominence;
    double left;  // half-prominence crossings
    double right;
    double center;
};

double crossing(double x0, double y0, double x1, double y1, double level) {
    if (y1 == y0) return 0.5 * (x0 + x1);
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0);
}

std::vector<Candidate> find_candidates(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<Candidate> out;
    const std::size_t n = y.size();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
        // Skip the tail of a plateau so each flat top counts once.
        if (i >= 2 && y[i - 1] == y[i]) continue;

        std::size_t l = i;
        double left_min = y[i];
        while (l > 0 && y[l - 1] <= y[i]) {
            --l;
            left_min = std::min(left_min, y[l]);
        }
        std::size_t r = i;
        double right_min = y[i];
        while (r + 1 < n && y[r + 1] <= y[i]) {
            ++r;
            right_min = std::min(right_min, y[r]);
        }
        const double base = std::max(left_min, right_min);
        const double prominence = y[i] - base;
        if (!(prominence > 0.0)) continue;
        const double level = y[i] - 0.5 * prominence;

        std::size_t j = i;
        while (j > l && y[j - 1] > level) --j;
        const double left = j > 0 ? crossing(x[j - 1], y[j - 1], x[j], y[j], level) : x[0];
        std::size_t k = i;
        while (k < r && y[k + 1] > level) ++k;
        const double right = k + 1 < n ? crossing(x[k], y[k], x[k + 1], y[k + 1], level) : x[n - 1];

        // Vertex of the parabola through the three points around the maximum.
        const double x0 = x[i - 1], x1 = x[i], x2 = x[i + 1];
        const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1];
        const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
        const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
        double center = x1;
        if (den != 0.0) {
            center = x1 - 0.5 * num / den;
            center = std::clamp(center, 0.5 * (x0 + x1), 0.5 * (x1 + x2));
        }
        out.push_back({i, prominence, left, right, center});
    }
    return out;
}

std::string describe(const std::vector<LineFeature>& features) {
    std::ostringstream os;
    os << features.size() << " found";
    for (const auto& f : features) os << " [center " << f.center << ", fwhm " << f.fwhm << ", depth " << f.depth << "]";
    return os.str();
}

} // namespace

std::vector<LineFeature> extract_line_features(const Spectrum& spectrum, std::size_t expected,
                                               Polarity polarity, const FeatureOptions& options) {
    if (expected == 0) throw UsageError("expected feature count must be positive");
    const auto& x = spectrum.probe();
    std::vector<double> y = spectrum.values();
    if (polarity == Polarity::Dip)
        for (double& v : y) v = -v;

    auto candidates = find_candidates(x, y);
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.prominence > b.prominence; });

    struct Accepted {
        LineFeature feature;
        double left;
        double right;
    };
    std::vector<Accepted> accepted;
    for (const auto& c : candidates) {
        if (accepted.size() == expected) break;
        if (c.prominence < options.min_prominence) break;
        const double fwhm = c.right - c.left;
        bool absorbed = false;
        for (auto& a : accepted) {
            const double mean_fwhm = 0.5 * (a.feature.fwhm + fwhm);
            if (std::abs(a.feature.center - c.center) < mean_fwhm) {
                a.left = std::min(a.left, c.left);
                a.right = std::max(a.right, c.right);
                a.feature.fwhm = a.right - a.left;
                a.feature.merged = true;
                absorbed = true;
                break;
            }
        }
        if (!absorbed) accepted.push_back({{c.center, fwhm, c.prominence, false}, c.left, c.right});
    }

    std::vector<LineFeature> features;
    for (const auto& a : accepted) features.push_back(a.feature);
    std::sort(features.begin(), features.end(),
              [](const LineFeature& a, const LineFeature& b) { return a.center < b.center; });
    if (features.size() < expected) {
        throw FeatureError("expected " + std::to_string(expected) + " line features, " + describe(features),
                           features);
    }
    return features;
}

Spectrum ReflectivityMap::row(std::size_t r) const {
    const auto begin = values.begin() + static_cast<std::ptrdiff_t>(r * probe.size());
    return Spectrum(probe, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(probe.size())));
}

ReflectivityMap anticrossing_map(std::span<const double> probe, std::span<const double> delta_ab,
                                 const AnticrossingScenario& scenario, MapMode mode) {
    if (probe.empty() || delta_ab.empty()) throw UsageError("map grids must be non-empty");
    ReflectivityMap map;
    map.probe.assign(probe.begin(), probe.end());
    map.delta_ab.assign(delta_ab.begin(), delta_ab.end());
    map.values.resize(probe.size() * delta_ab.size());

    for (std::size_t r = 0; r < delta_ab.size(); ++r) {
        AtomScenario a = scenario.atom_a;
        AtomScenario b = scenario.atom_b;
        a.light_shift += 0.5 * delta_ab[r];
        b.light_shift -= 0.5 * delta_ab[r];
        std::vector<double> row;
        if (mode == MapMode::TwoAtom) {
            const std::array<AtomScenario, 2> atoms{a, b};
            row = averaged_spectrum(probe, scenario.cavity, atoms, scenario.geometry, scenario.monte_carlo)
                      .spectrum.values();
        } else {
            MonteCarloConfig mc_b = scenario.monte_carlo;
            mc_b.seed = derive_seed(scenario.monte_carlo.seed, 1);
            const auto sa = averaged_spectrum(probe, scenario.cavity, std::span(&a, 1), scenario.geometry,
                                              scenario.monte_carlo);
            const auto sb = averaged_spectrum(probe, scenario.cavity, std::span(&b, 1), scenario.geometry, mc_b);
            row.resize(probe.size());
            for (std::size_t i = 0; i < probe.size(); ++i)
                row[i] = 0.5 * (sa.spectrum.values()[i] + sb.spectrum.values()[i]);
        }
        std::copy(row.begin(), row.end(), map.values.begin() + static_cast<std::ptrdiff_t>(r * probe.size()));
    }
    return map;
}

std::vector<GapPoint> extract_gaps(const ReflectivityMap& map, Polarity polarity, const FeatureOptions& options) {
    std::vector<GapPoint> out;
    for (std::size_t r = 0; r < map.delta_ab.size(); ++r) {
        GapPoint point{map.delta_ab[r], 0.0, false};
        try {
            const auto features = extract_line_features(map.row(r), 2, polarity, options);
            if (!features[0].merged && !features[1].merged) {
                point.gap = features[1].center - features[0].center;
                point.resolved = true;
            }
        } catch (const FeatureError&) {
        }
        out.push_back(point);
    }
    return out;
}

HyperbolaFit fit_anticrossing(std::span<const GapPoint> gaps) {
    std::vector<const GapPoint*> used;
    double max_gap = 0.0;
    for (const auto& g : gaps) {
        if (!g.resolved) continue;
        used.push_back(&g);
        max_gap = std::max(max_gap, g.gap);
    }
    if (used.size() < 2) throw UsageError("anticrossing fit needs at least two resolved rows");

    auto sse = [&](double coupling) {
        double s = 0.0;
        for (const auto* g : used) {
            const double d = std::hypot(coupling, g->delta_ab) - g->gap;
            s += d * d;
        }
        return s;
    };
    // Golden-section search on [0, max_gap].
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = 0.0, hi = max_gap;
    double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
    double fc = sse(c), fd = sse(d);
    for (int it = 0; it < 200 && hi - lo > 1e-10 * std::max(1.0, max_gap); ++it) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = sse(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = sse(d);
        }
    }
    HyperbolaFit fit;
    fit.coupling = 0.5 * (lo + hi);
    if (sse(0.0) < sse(fit.coupling)) fit.coupling = 0.0;
    fit.points = used.size();
    double mean = 0.0;
    for (const auto* g : used) mean += g->gap;
    mean /= static_cast<double>(used.size());
    double total = 0.0;
    for (const auto* g : used) total += (g->gap - mean) * (g->gap - mean);
    fit.r_squared = total > 0.0 ? 1.0 - sse(fit.coupling) / total : 1.0;
    return fit;
}

} // namespace cavqed
