#include "cavqed/fitter.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "cavqed/errors.hpp"
#include "cavqed/parallel.hpp"
#include "cavqed/random.hpp"

namespace cavqed {

std::string FitParameter::name() const {
    const std::string index = "[" + std::to_string(atom) + "][" + std::to_string(line) + "]";
    switch (kind) {
    case ParameterKind::LineC0: return "c0" + index;
    case ParameterKind::LineRabi: return "g0_mhz" + index;
    case ParameterKind::LineOccupancy: return "occupancy" + index;
    case ParameterKind::Wx: return "wx_nm";
    case ParameterKind::Wz: return "wz_nm";
    case ParameterKind::CavityDetuning: return "delta_c_mhz";
    case ParameterKind::Scale: return "scale";
    case ParameterKind::Offset: return "offset";
    }
    return "unknown";
}

void FitProblem::validate(std::span<const double> initial) const {
    if (parameters.empty()) throw UsageError("fit needs at least one floating parameter");
    if (initial.size() != parameters.size()) throw UsageError("initial guess does not match the parameter list");
    if (weights && weights->size() != data.size()) throw UsageError("weights do not match the data length");
    if (model.monte_carlo.samples < 1) throw UsageError("fit needs at least one Monte Carlo sample");
    for (std::size_t k = 0; k < parameters.size(); ++k) {
        const auto& p = parameters[k];
        if (!std::isfinite(p.lower) || !std::isfinite(p.upper) || !(p.upper > p.lower))
            throw UsageError("parameter " + p.name() + " needs finite bounds with lower < upper");
        if (!(initial[k] >= p.lower && initial[k] <= p.upper))
            throw UsageError("initial value of " + p.name() + " lies outside its bounds");
        const bool per_line = p.kind == ParameterKind::LineC0 || p.kind == ParameterKind::LineRabi ||
                              p.kind == ParameterKind::LineOccupancy;
        if (per_line && (p.atom >= model.atoms.size() || p.line >= model.atoms[p.atom].lines.size()))
            throw UsageError("parameter " + p.name() + " refers to a missing line");
    }
}

FitModel apply_parameters(const FitModel& model, std::span<const FitParameter> parameters,
                          std::span<const double> values) {
    FitModel out = model;
    const double kappa = model.cavity.kappa();
    for (std::size_t k = 0; k < parameters.size(); ++k) {
        const auto& p = parameters[k];
        const double v = values[k];
        switch (p.kind) {
        case ParameterKind::LineC0: {
            auto& line = out.atoms[p.atom].lines[p.line];
            line = line.with_cooperativity(v);
            break;
        }
        case ParameterKind::LineRabi: {
            auto& line = out.atoms[p.atom].lines[p.line];
            line = line.with_cooperativity(cooperativity(v, kappa, line.gamma()));
            break;
        }
        case ParameterKind::LineOccupancy: {
            auto& atom = out.atoms[p.atom];
            if (atom.line_occupancy.empty()) atom.line_occupancy.assign(atom.lines.size(), 1.0);
            atom.line_occupancy[p.line] = v;
            break;
        }
        case ParameterKind::Wx:
            for (auto& atom : out.atoms) atom.wx_nm = v;
            break;
        case ParameterKind::Wz:
            for (auto& atom : out.atoms) atom.wz_nm = v;
            break;
        case ParameterKind::CavityDetuning: out.cavity = out.cavity.with_detuning(v); break;
        case ParameterKind::Scale: out.scale = v; break;
        case ParameterKind::Offset: out.offset = v; break;
        }
    }
    return out;
}

std::vector<double> evaluate_model(const FitModel& model, std::span<const double> grid) {
    const auto averaged = averaged_spectrum(grid, model.cavity, model.atoms, model.geometry, model.monte_carlo);
    std::vector<double> out = averaged.spectrum.values();
    for (double& v : out) v = model.scale * v + model.offset;
    return out;
}

std::vector<CooperativityStats> model_cooperativity_stats(const FitModel& model) {
    std::vector<CooperativityStats> out;
    for (std::size_t a = 0; a < model.atoms.size(); ++a) {
        const auto& atom = model.atoms[a];
        double strongest = 0.0;
        for (const auto& line : atom.lines) strongest = std::max(strongest, line.cooperativity());
        // Same stream as averaged_spectrum uses for this atom.
        const auto positions =
            sample_positions({atom.wx_nm, atom.wz_nm, derive_seed(model.monte_carlo.seed, 2 * a), model.monte_carlo.samples});
        std::vector<double> c(positions.size());
        for (std::size_t s = 0; s < positions.size(); ++s)
            c[s] = strongest * displaced_mode_factor(positions[s], atom.offset_um, model.geometry);
        out.push_back(cooperativity_stats(c));
    }
    return out;
}

namespace {

class Objective {
public:
    Objective(const FitProblem& problem) : problem_(problem), weights_(problem.data.size(), 1.0) {
        if (problem.weights) {
            for (std::size_t i = 0; i < weights_.size(); ++i) weights_[i] = std::sqrt((*problem.weights)[i]);
        } else if (problem.options.weight_by_stderr && problem.data.standard_error()) {
            const auto& se = *problem.data.standard_error();
            for (std::size_t i = 0; i < weights_.size(); ++i) weights_[i] = se[i] > 0.0 ? 1.0 / se[i] : 0.0;
        }
    }

    std::size_t dimension() const { return problem_.parameters.size(); }

    double lower(std::size_t k) const { return problem_.parameters[k].lower; }
    double range(std::size_t k) const { return problem_.parameters[k].upper - problem_.parameters[k].lower; }

    std::vector<double> to_physical(const Eigen::VectorXd& u) const {
        std::vector<double> x(dimension());
        for (std::size_t k = 0; k < x.size(); ++k) x[k] = lower(k) + range(k) * u(static_cast<Eigen::Index>(k));
        return x;
    }

    Eigen::VectorXd residuals(const Eigen::VectorXd& u) {
        ++evaluations;
        const auto x = to_physical(u);
        const FitModel model = apply_parameters(problem_.model, problem_.parameters, x);
        const auto prediction = evaluate_model(model, problem_.data.probe());
        Eigen::VectorXd r(static_cast<Eigen::Index>(prediction.size()));
        for (std::size_t i = 0; i < prediction.size(); ++i)
            r(static_cast<Eigen::Index>(i)) = weights_[i] * (prediction[i] - problem_.data.values()[i]);
        return r;
    }

    std::size_t evaluations = 0;

private:
    const FitProblem& problem_;
    std::vector<double> weights_;
};

} // namespace

FitResult fit_spectrum(const FitProblem& problem, std::span<const double> initial) {
    problem.validate(initial);
    Objective objective(problem);
    const auto p = static_cast<Eigen::Index>(objective.dimension());
    const auto& opts = problem.options;

    Eigen::VectorXd u(p);
    for (Eigen::Index k = 0; k < p; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        u(k) = (initial[kk] - objective.lower(kk)) / objective.range(kk);
    }

    Eigen::VectorXd r = objective.residuals(u);
    double f = r.squaredNorm();
    FitResult result;
    result.initial.assign(initial.begin(), initial.end());
    result.objective_trace.push_back(f);
    double lambda = 1e-3;
    constexpr double h = 1e-4;
    bool jacobian_stale = true;
    Eigen::MatrixXd jac(r.size(), p);

    while (result.iterations < opts.max_iterations) {
        if (f == 0.0) {
            result.converged = true;
            break;
        }
        if (jacobian_stale) {
            for (Eigen::Index k = 0; k < p; ++k) {
                Eigen::VectorXd up = u, down = u;
                up(k) = std::min(1.0, u(k) + h);
                down(k) = std::max(0.0, u(k) - h);
                const Eigen::VectorXd rp = up(k) == u(k) ? r : objective.residuals(up);
                const Eigen::VectorXd rm = down(k) == u(k) ? r : objective.residuals(down);
                jac.col(k) = (rp - rm) / (up(k) - down(k));
            }
            jacobian_stale = false;
        }
        ++result.iterations;

        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd gradient = jac.transpose() * r;
        Eigen::VectorXd diag = jtj.diagonal();
        const double floor = std::max(1e-12 * diag.maxCoeff(), 1e-300);
        for (Eigen::Index k = 0; k < p; ++k) diag(k) = std::max(diag(k), floor);

        Eigen::MatrixXd damped = jtj;
        damped.diagonal() += lambda * diag;
        const Eigen::VectorXd step = damped.ldlt().solve(-gradient);
        Eigen::VectorXd trial = u + step;
        for (Eigen::Index k = 0; k < p; ++k) trial(k) = std::clamp(trial(k), 0.0, 1.0);
        const double step_norm = (trial - u).norm();
        result.final_step_norm = step_norm;

        const Eigen::VectorXd r_trial = objective.residuals(trial);
        const double f_trial = r_trial.squaredNorm();
        if (f_trial < f) {
            const double decrease = (f - f_trial) / f;
            u = trial;
            r = r_trial;
            f = f_trial;
            result.objective_trace.push_back(f);
            lambda = std::max(lambda / 3.0, 1e-12);
            jacobian_stale = true;
            if (decrease < opts.relative_tolerance || step_norm < opts.step_tolerance) {
                result.converged = true;
                break;
            }
        } else {
            if (step_norm < opts.step_tolerance) {
                result.converged = true;
                break;
            }
            lambda *= 4.0;
            if (lambda > 1e16) {
                result.converged = true;
                break;
            }
        }
    }

    result.values = objective.to_physical(u);
    for (const auto& param : problem.parameters) result.names.push_back(param.name());
    result.residual_sum_squares = f;
    result.evaluations = objective.evaluations;
    return result;
}

BootstrapResult bootstrap_uncertainty(const FitProblem& problem, const FitResult& best, std::size_t n_boot,
                                      std::uint64_t seed, BootstrapMode mode) {
    BootstrapResult out;
    if (n_boot == 0) {
        out.empty = true;
        return out;
    }
    const bool full = mode == BootstrapMode::FullProcedure;
    if (full && best.initial.size() != best.values.size())
        throw UsageError("full-procedure bootstrap needs the initial guess of the fit");
    const FitModel best_model = apply_parameters(problem.model, problem.parameters, best.values);
    const auto& probe = problem.data.probe();
    const auto curve = evaluate_model(best_model, probe);
    std::vector<double> residuals(curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) residuals[i] = problem.data.values()[i] - curve[i];

    struct Replicate {
        bool ok = false;
        std::vector<double> values;
        std::vector<double> means;
        std::vector<double> stds;
    };
    std::vector<Replicate> replicates(n_boot);
    parallel_for(n_boot, [&](std::size_t b) {
        Rng rng(derive_seed(seed, b));
        std::vector<double> resampled(curve.size());
        for (std::size_t i = 0; i < curve.size(); ++i) {
            auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(curve.size()));
            j = std::min(j, curve.size() - 1);
            resampled[i] = curve[i] + residuals[j];
        }
        FitProblem replica{Spectrum::measured(probe, std::move(resampled), problem.data.standard_error()),
                           problem.weights, problem.model, problem.parameters, problem.options};
        if (full) replica.model.monte_carlo.seed = derive_seed(problem.model.monte_carlo.seed, b);
        const FitResult fit = fit_spectrum(replica, full ? best.initial : best.values);
        auto& rep = replicates[b];
        rep.ok = fit.converged;
        rep.values = fit.values;
        for (const auto& s : model_cooperativity_stats(apply_parameters(replica.model, problem.parameters, fit.values))) {
            rep.means.push_back(s.mean);
            rep.stds.push_back(s.std);
        }
    });

    std::vector<const Replicate*> used;
    for (const auto& rep : replicates) {
        if (rep.ok) used.push_back(&rep);
        else ++out.excluded;
    }
    out.used = used.size();
    if (static_cast<double>(out.excluded) > 0.2 * static_cast<double>(n_boot))
        throw NumericalError("bootstrap: " + std::to_string(out.excluded) + " of " + std::to_string(n_boot) +
                             " refits did not converge");

    auto spread = [&](auto member, std::size_t k) {
        if (used.size() < 2) return 0.0;
        double mean = 0.0;
        for (const auto* rep : used) mean += (rep->*member)[k];
        mean /= static_cast<double>(used.size());
        double ss = 0.0;
        for (const auto* rep : used) ss += ((rep->*member)[k] - mean) * ((rep->*member)[k] - mean);
        return std::sqrt(ss / static_cast<double>(used.size() - 1));
    };
    for (std::size_t k = 0; k < best.values.size(); ++k) out.std_errors.push_back(spread(&Replicate::values, k));
    for (std::size_t a = 0; a < problem.model.atoms.size(); ++a) {
        out.derived_mean_errors.push_back(spread(&Replicate::means, a));
        out.derived_std_errors.push_back(spread(&Replicate::stds, a));
    }
    return out;
}

Spectrum add_gaussian_noise(const Spectrum& clean, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw DomainError("noise level must be non-negative");
    Rng rng(seed);
    std::vector<double> values = clean.values();
    for (double& v : values) v += sigma * rng.normal();
    return Spectrum::measured(clean.probe(), std::move(values));
}

} // namespace cavqed
