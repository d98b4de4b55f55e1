#include "cavqed/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cavqed/errors.hpp"
#include "cavqed/parallel.hpp"
#include "cavqed/random.hpp"

namespace cavqed {

namespace {

constexpr std::size_t kChunk = 4096;

double normal_cdf(double x, const NormalDist& d) {
    return 0.5 * std::erfc(-(x - d.mean) / (d.sigma * std::numbers::sqrt2));
}

// up to a common constant; the log form does not underflow far in the tails
double normal_log_pdf(double x, const NormalDist& d) {
    const double u = (x - d.mean) / d.sigma;
    return -0.5 * u * u - std::log(d.sigma);
}

std::vector<std::uint64_t> histogram(const std::vector<std::uint64_t>& counts, std::size_t size) {
    std::vector<std::uint64_t> h(size, 0);
    for (auto c : counts) ++h[static_cast<std::size_t>(c)];
    return h;
}

} // namespace

void CountModel::validate() const {
    if (!(rate_with_atom >= 0.0) || !(rate_without_atom >= 0.0)) throw DomainError("count rates must be non-negative");
    if (!(window_us > 0.0)) throw DomainError("counting window must be positive");
    if (trials < 1) throw UsageError("at least one trial is required");
}

CountHistograms simulate_count_histograms(const CountModel& model) {
    model.validate();
    CountHistograms out;
    out.counts_no_atom.resize(model.trials);
    out.counts_atom.resize(model.trials);
    const std::size_t chunks = (model.trials + kChunk - 1) / kChunk;
    parallel_for(2 * chunks, [&](std::size_t job) {
        const std::size_t c = job / 2;
        const std::size_t h = job % 2;
        auto& target = h == 0 ? out.counts_no_atom : out.counts_atom;
        const double mean = h == 0 ? model.mean_without_atom() : model.mean_with_atom();
        Rng rng(derive_seed(model.seed, 2 * c + h));
        const std::size_t end = std::min(model.trials, (c + 1) * kChunk);
        for (std::size_t t = c * kChunk; t < end; ++t) target[t] = rng.poisson(mean);
    });
    std::uint64_t max_count = 0;
    for (auto v : out.counts_no_atom) max_count = std::max(max_count, v);
    for (auto v : out.counts_atom) max_count = std::max(max_count, v);
    out.histogram_no_atom = histogram(out.counts_no_atom, max_count + 1);
    out.histogram_atom = histogram(out.counts_atom, max_count + 1);
    return out;
}

OverlapResult overlap_error(std::span<const double> dist_no_atom, std::span<const double> dist_atom) {
    const std::size_t n = std::max(dist_no_atom.size(), dist_atom.size());
    auto at = [](std::span<const double> d, std::size_t k) { return k < d.size() ? d[k] : 0.0; };
    double mass0 = 0.0, mass1 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (at(dist_no_atom, k) < 0.0 || at(dist_atom, k) < 0.0) throw DomainError("histogram entries must be non-negative");
        mass0 += at(dist_no_atom, k);
        mass1 += at(dist_atom, k);
    }
    if (!(mass0 > 0.0) || !(mass1 > 0.0)) throw UsageError("empty distribution");

    double overlap = 0.0;
    double mean0 = 0.0, mean1 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double p0 = at(dist_no_atom, k) / mass0;
        const double p1 = at(dist_atom, k) / mass1;
        overlap += std::min(p0, p1);
        mean0 += static_cast<double>(k) * p0;
        mean1 += static_cast<double>(k) * p1;
    }
    // Threshold on the side of the larger mean.
    const bool atom_high = mean1 >= mean0;
    std::span<const double> high = atom_high ? dist_atom : dist_no_atom;
    std::span<const double> low = atom_high ? dist_no_atom : dist_atom;
    const double mass_high = atom_high ? mass1 : mass0;
    const double mass_low = atom_high ? mass0 : mass1;
    const double lo_mean = std::min(mean0, mean1);
    double threshold = static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (static_cast<double>(k) < lo_mean) continue;
        if (at(high, k) / mass_high >= at(low, k) / mass_low) {
            threshold = static_cast<double>(k);
            break;
        }
    }
    return {0.5 * overlap, {threshold, atom_high ? Hypothesis::Atom : Hypothesis::NoAtom}};
}

OverlapResult overlap_error(NormalDist no_atom, NormalDist atom) {
    if (!(no_atom.sigma > 0.0) || !(atom.sigma > 0.0)) throw DomainError("normal widths must be positive");
    const bool atom_high = atom.mean >= no_atom.mean;
    const NormalDist& lo = atom_high ? no_atom : atom;
    const NormalDist& hi = atom_high ? atom : no_atom;

    // Density crossings: solve log f_lo(x) = log f_hi(x).
    std::vector<double> roots;
    const double a = 1.0 / (lo.sigma * lo.sigma) - 1.0 / (hi.sigma * hi.sigma);
    const double b = -2.0 * (lo.mean / (lo.sigma * lo.sigma) - hi.mean / (hi.sigma * hi.sigma));
    const double c = lo.mean * lo.mean / (lo.sigma * lo.sigma) - hi.mean * hi.mean / (hi.sigma * hi.sigma) +
                     2.0 * std::log(lo.sigma / hi.sigma);
    // a x^2 + b x + c = 0 is -2 (log f_lo - log f_hi) = 0.
    if (std::abs(a) < 1e-15 * (1.0 / (lo.sigma * lo.sigma))) {
        if (b != 0.0) roots.push_back(-c / b);
    } else {
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            const double s = std::sqrt(disc);
            const double q = -0.5 * (b + std::copysign(s, b));
            roots.push_back(q / a);
            if (q != 0.0) roots.push_back(c / q);
        }
    }
    std::sort(roots.begin(), roots.end());

    // Sum the smaller density's mass over each interval between crossings.
    std::vector<double> edges{-std::numeric_limits<double>::infinity()};
    edges.insert(edges.end(), roots.begin(), roots.end());
    edges.push_back(std::numeric_limits<double>::infinity());
    double overlap = 0.0;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        const double left = edges[k], right = edges[k + 1];
        double probe;
        if (std::isinf(left) && std::isinf(right)) probe = 0.5 * (lo.mean + hi.mean);
        else if (std::isinf(left)) probe = right - 1.0 - std::max(lo.sigma, hi.sigma);
        else if (std::isinf(right)) probe = left + 1.0 + std::max(lo.sigma, hi.sigma);
        else probe = 0.5 * (left + right);
        const NormalDist& smaller = normal_log_pdf(probe, lo) <= normal_log_pdf(probe, hi) ? lo : hi;
        overlap += normal_cdf(right, smaller) - normal_cdf(left, smaller);
    }

    double threshold = 0.5 * (lo.mean + hi.mean);
    double best = std::numeric_limits<double>::infinity();
    for (double r : roots) {
        const double distance = std::abs(r - 0.5 * (lo.mean + hi.mean));
        if (r >= lo.mean && r <= hi.mean && distance < best) {
            best = distance;
            threshold = r;
        }
    }
    return {0.5 * overlap, {threshold, atom_high ? Hypothesis::Atom : Hypothesis::NoAtom}};
}

Hypothesis classify(double count, const Threshold& threshold) {
    const Hypothesis other = threshold.at_or_above == Hypothesis::Atom ? Hypothesis::NoAtom : Hypothesis::Atom;
    return count >= threshold.value ? threshold.at_or_above : other;
}

std::vector<double> poisson_pmf(double mean, std::size_t max_count) {
    if (!(mean >= 0.0)) throw DomainError("Poisson mean must be non-negative");
    std::vector<double> pmf(max_count + 1);
    for (std::size_t k = 0; k <= max_count; ++k) {
        const double kd = static_cast<double>(k);
        pmf[k] = mean == 0.0 ? (k == 0 ? 1.0 : 0.0) : std::exp(kd * std::log(mean) - mean - std::lgamma(kd + 1.0));
    }
    return pmf;
}

ClassificationReport classification_report(const CountModel& model, const CountHistograms& histograms) {
    model.validate();
    ClassificationReport report;
    const double m0 = model.mean_without_atom();
    const double m1 = model.mean_with_atom();
    const auto kmax = static_cast<std::size_t>(std::max(m0, m1) + 20.0 * std::sqrt(std::max(m0, m1)) + 30.0);
    const auto p0 = poisson_pmf(m0, kmax);
    const auto p1 = poisson_pmf(m1, kmax);
    report.analytic_poisson = overlap_error(p0, p1);
    if (m0 > 0.0 && m1 > 0.0)
        report.analytic_normal = overlap_error(NormalDist{m0, std::sqrt(m0)}, NormalDist{m1, std::sqrt(m1)});
    else
        report.analytic_normal = report.analytic_poisson;

    const Threshold& t = report.analytic_poisson.threshold;
    for (auto c : histograms.counts_no_atom)
        if (classify(static_cast<double>(c), t) != Hypothesis::NoAtom) ++report.misclassified_no_atom;
    for (auto c : histograms.counts_atom)
        if (classify(static_cast<double>(c), t) != Hypothesis::Atom) ++report.misclassified_atom;
    const double total = static_cast<double>(histograms.counts_no_atom.size() + histograms.counts_atom.size());
    report.empirical_error = static_cast<double>(report.misclassified_no_atom + report.misclassified_atom) / total;
    const double p = report.analytic_poisson.error;
    report.binomial_sigma = std::sqrt(p * (1.0 - p) / total);
    return report;
}

} // namespace cavqed
