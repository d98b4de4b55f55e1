#pragma once

// Reference implementations used only by the tests. They are written straight
// from the textbook formulas and share no code with the library.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace ref {

struct Line {
    double g2;    // g^2, MHz^2
    double gamma; // MHz
    double omega; // line frequency including light shift, MHz
};

// r = kappa_wg / (kappa/2 - i (probe - delta_c) + sum g^2 / (gamma/2 - i (probe - omega))) - 1
inline std::complex<double> reflection(double probe, double kwg, double ksc, double delta_c, const std::vector<Line>& lines) {
    using C = std::complex<double>;
    const C i(0.0, 1.0);
    C denom = (kwg + ksc) / 2.0 - i * (probe - delta_c);
    for (const auto& l : lines) denom += l.g2 / (l.gamma / 2.0 - i * (probe - l.omega));
    return kwg / denom - 1.0;
}

inline double g2_from_c(double c, double kappa, double gamma) { return c * kappa * gamma / 4.0; }

// Root of f on [a, b] by bisection; f(a) and f(b) must differ in sign.
inline double bisect(const std::function<double(double)>& f, double a, double b, int iterations = 200) {
    double fa = f(a);
    for (int k = 0; k < iterations; ++k) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if ((fm < 0) == (fa < 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int k = 1; k < n; ++k) s += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

inline double normal_pdf(double x, double mu, double sigma) {
    const double u = (x - mu) / sigma;
    return std::exp(-0.5 * u * u) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

// E[f(X)], X ~ N(0, sigma^2), by quadrature over +-12 sigma.
inline double gaussian_expectation(const std::function<double(double)>& f, double sigma) {
    if (sigma == 0.0) return f(0.0);
    return simpson([&](double x) { return f(x) * normal_pdf(x, 0.0, sigma); }, -12.0 * sigma, 12.0 * sigma, 200000);
}

inline double poisson_pmf(double mean, int k) {
    if (mean == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

} // namespace ref
