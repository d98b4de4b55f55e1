#pragma once

// Single-shot atom detection from reflected photon counts: Poisson count
// histograms for the two hypotheses, minimum-error threshold and overlap.

#include <cstdint>
#include <span>
#include <vector>

namespace cavqed {

// Synthetic defaults: count rates are not calibrated against an apparatus.
// Means 77 and 40 per 100 us window give a 0.70% minimum-error overlap both
// for the exact Poisson distributions and for their normal approximations.
struct CountModel {
    double rate_with_atom = 0.77;    // counts / us
    double rate_without_atom = 0.40; // counts / us
    double window_us = 100.0;
    std::size_t trials = 100000;
    std::uint64_t seed = 7;

    void validate() const;
    double mean_with_atom() const { return rate_with_atom * window_us; }
    double mean_without_atom() const { return rate_without_atom * window_us; }
};

enum class Hypothesis { NoAtom, Atom };

struct CountHistograms {
    std::vector<std::uint64_t> counts_no_atom; // per trial
    std::vector<std::uint64_t> counts_atom;
    std::vector<std::uint64_t> histogram_no_atom; // index = photon count
    std::vector<std::uint64_t> histogram_atom;
};

// Trials are drawn in chunks of 4096; chunk c of hypothesis h uses
// Rng(derive_seed(seed, 2 c + h)), h = 0 without and 1 with the atom.
CountHistograms simulate_count_histograms(const CountModel& model);

struct NormalDist {
    double mean;
    double sigma;
};

struct Threshold {
    double value;
    Hypothesis at_or_above; // hypothesis assigned to counts >= value
};

struct OverlapResult {
    double error;       // 1/2 * integral (sum) of min(p0, p1)
    Threshold threshold;
};

// Distributions given as (unnormalised) histograms over counts 0, 1, 2, ...;
// the threshold is the first count where the second distribution is at least
// as likely as the first, so a count equal to the threshold goes to the
// denser side.
OverlapResult overlap_error(std::span<const double> dist_no_atom, std::span<const double> dist_atom);

// Normal pair; handles unequal widths through both density crossings.
OverlapResult overlap_error(NormalDist no_atom, NormalDist atom);

Hypothesis classify(double count, const Threshold& threshold);

std::vector<double> poisson_pmf(double mean, std::size_t max_count);

struct ClassificationReport {
    OverlapResult analytic_poisson;
    OverlapResult analytic_normal;
    double empirical_error = 0.0;  // misclassified / (2 trials)
    double binomial_sigma = 0.0;   // sqrt(p (1 - p) / (2 trials)) at the analytic error
    std::uint64_t misclassified_no_atom = 0;
    std::uint64_t misclassified_atom = 0;
};

ClassificationReport classification_report(const CountModel& model, const CountHistograms& histograms);

} // namespace cavqed
