#include "cavqed/oracle.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <string>

#include "cavqed/errors.hpp"

namespace cavqed {

namespace {

using SparseC = Eigen::SparseMatrix<Complex>;
using Triplet = Eigen::Triplet<Complex>;

SparseC identity(std::size_t n) {
    SparseC m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    m.setIdentity();
    return m;
}

SparseC kron(const SparseC& a, const SparseC& b) {
    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(a.nonZeros() * b.nonZeros()));
    for (int ka = 0; ka < a.outerSize(); ++ka) {
        for (SparseC::InnerIterator ia(a, ka); ia; ++ia) {
            for (int kb = 0; kb < b.outerSize(); ++kb) {
                for (SparseC::InnerIterator ib(b, kb); ib; ++ib) {
                    entries.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                                         ia.value() * ib.value());
                }
            }
        }
    }
    SparseC out(a.rows() * b.rows(), a.cols() * b.cols());
    out.setFromTriplets(entries.begin(), entries.end());
    return out;
}

// Embeds a single-factor operator into the full tensor product.
SparseC embed(const SparseC& op, std::size_t slot, const std::vector<std::size_t>& dims) {
    SparseC out = slot == 0 ? op : identity(dims[0]);
    for (std::size_t k = 1; k < dims.size(); ++k) out = kron(out, k == slot ? op : identity(dims[k]));
    return out;
}

SparseC ket_bra(std::size_t dim, std::size_t row, std::size_t col) {
    SparseC m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    m.insert(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = 1.0;
    return m;
}

SparseC annihilation(std::size_t levels) {
    SparseC m(static_cast<Eigen::Index>(levels), static_cast<Eigen::Index>(levels));
    for (std::size_t n = 1; n < levels; ++n)
        m.insert(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(n)) = std::sqrt(static_cast<double>(n));
    return m;
}

SparseC adjoint(const SparseC& m) { return SparseC(m.adjoint()); }

// Column-stacking vectorisation: vec(A X B) = (B^T kron A) vec(X).
void add_dissipator(SparseC& liouvillian, const SparseC& jump, const SparseC& id) {
    const SparseC jdj = adjoint(jump) * jump;
    const SparseC jump_conj = SparseC(jump.conjugate());
    liouvillian += kron(jump_conj, jump);
    liouvillian -= 0.5 * kron(id, jdj);
    liouvillian -= 0.5 * kron(SparseC(jdj.transpose()), id);
}

} // namespace

Complex linear_response_solve(double probe, const CavityParams& cavity, const EmitterSet& emitters) {
    const double kappa = cavity.kappa();
    const auto m = static_cast<Eigen::Index>(emitters.line_count());
    // Unknowns: <a>, <sigma_1..M>, scaled by a_in = 1.
    Eigen::MatrixXcd system = Eigen::MatrixXcd::Zero(m + 1, m + 1);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(m + 1);
    const Complex i(0.0, 1.0);
    system(0, 0) = Complex(0.5 * kappa, -(probe - cavity.delta_c()));
    rhs(0) = std::sqrt(cavity.kappa_wg());
    Eigen::Index k = 1;
    for (const auto& atom : emitters.atoms()) {
        for (const auto& line : atom.lines) {
            const double g = line.rabi(kappa);
            const double delta = probe - (line.delta() + atom.light_shift);
            // 0 = (i delta_c - kappa/2) a - i sum g_j sigma_j + sqrt(kappa_wg) a_in
            system(0, k) = i * g;
            // 0 = (i delta - gamma/2) sigma - i g a   (ground-state population ~ 1)
            system(k, 0) = i * g;
            system(k, k) = Complex(0.5 * line.gamma(), -delta);
            ++k;
        }
    }
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(system);
    const Eigen::VectorXcd solution = lu.solve(rhs);
    if (!solution.allFinite()) throw NumericalError("linear response system is singular");
    return std::sqrt(cavity.kappa_wg()) * solution(0) - 1.0;
}

std::size_t hilbert_dimension(const SystemSpec& spec) {
    if (spec.fock_cutoff < 1) throw UsageError("Fock cutoff must be at least 1");
    std::size_t d = static_cast<std::size_t>(spec.fock_cutoff) + 1;
    for (const auto& atom : spec.emitters.atoms()) {
        d *= 1 + atom.lines.size();
        if (d > (std::size_t{1} << 40)) break;
    }
    return d;
}

SteadyState lindblad_steady_state(const SystemSpec& spec, double probe, const LindbladOptions& options) {
    if (!(spec.drive_amplitude >= 0.0) || !std::isfinite(spec.drive_amplitude))
        throw DomainError("drive amplitude must be finite and non-negative");
    const std::size_t d = hilbert_dimension(spec);
    if (d > options.max_dimension)
        throw UsageError("Hilbert dimension " + std::to_string(d) + " exceeds cap " +
                         std::to_string(options.max_dimension));

    const auto& cavity = spec.cavity;
    const double kappa = cavity.kappa();
    std::vector<std::size_t> dims{static_cast<std::size_t>(spec.fock_cutoff) + 1};
    for (const auto& atom : spec.emitters.atoms()) dims.push_back(1 + atom.lines.size());

    const SparseC a = embed(annihilation(dims[0]), 0, dims);
    const SparseC a_dag = adjoint(a);
    const SparseC id = identity(d);
    const Complex i(0.0, 1.0);

    // Rotating frame at the probe: H = -delta_c a^dag a - sum delta_l |e_l><e_l| + couplings + drive.
    SparseC hamiltonian = -(probe - cavity.delta_c()) * (a_dag * a);
    const double a_in = spec.drive_amplitude;
    hamiltonian += i * std::sqrt(cavity.kappa_wg()) * a_in * (a_dag - a);

    SparseC liouvillian(static_cast<Eigen::Index>(d * d), static_cast<Eigen::Index>(d * d));
    add_dissipator(liouvillian, std::sqrt(kappa) * a, id);

    std::vector<std::vector<SparseC>> projectors;
    for (std::size_t atom_index = 0; atom_index < spec.emitters.atoms().size(); ++atom_index) {
        const auto& atom = spec.emitters.atoms()[atom_index];
        const std::size_t levels = dims[atom_index + 1];
        projectors.emplace_back();
        SparseC cumulative(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        for (std::size_t l = 0; l < atom.lines.size(); ++l) {
            const auto& line = atom.lines[l];
            // sigma_l = |g><e_l|, ground state is level 0.
            const SparseC sigma = embed(ket_bra(levels, 0, l + 1), atom_index + 1, dims);
            const SparseC sigma_dag = adjoint(sigma);
            const double delta = probe - (line.delta() + atom.light_shift);
            const double g = line.rabi(kappa);
            const SparseC excited = sigma_dag * sigma;
            hamiltonian += -delta * excited;
            hamiltonian += g * (a_dag * sigma + a * sigma_dag);
            projectors.back().push_back(excited);
            const SparseC jump = std::sqrt(line.gamma()) * sigma;
            if (spec.decay == DecayModel::Individual) add_dissipator(liouvillian, jump, id);
            else cumulative += jump;
        }
        if (spec.decay == DecayModel::Cumulative && !atom.lines.empty()) add_dissipator(liouvillian, cumulative, id);
    }
    liouvillian += -i * (kron(id, hamiltonian) - kron(SparseC(hamiltonian.transpose()), id));
    liouvillian.makeCompressed();

    double scale = 0.0;
    for (int k = 0; k < liouvillian.outerSize(); ++k)
        for (SparseC::InnerIterator it(liouvillian, k); it; ++it) scale = std::max(scale, std::abs(it.value()));

    // Replace the first equation by the trace condition.
    const auto n = static_cast<Eigen::Index>(d * d);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
    rhs(0) = 1.0;
    Eigen::VectorXcd vec_rho;
    if (static_cast<std::size_t>(n) <= options.dense_liouvillian) {
        Eigen::MatrixXcd dense = Eigen::MatrixXcd(liouvillian);
        dense.row(0).setZero();
        for (std::size_t k = 0; k < d; ++k) dense(0, static_cast<Eigen::Index>(k * (d + 1))) = 1.0;
        vec_rho = dense.fullPivLu().solve(rhs);
    } else {
        SparseC constrained = liouvillian;
        constrained.prune([](Eigen::Index row, Eigen::Index, const Complex&) { return row != 0; });
        std::vector<Triplet> trace;
        for (std::size_t k = 0; k < d; ++k) trace.emplace_back(0, static_cast<Eigen::Index>(k * (d + 1)), 1.0);
        SparseC trace_row(n, n);
        trace_row.setFromTriplets(trace.begin(), trace.end());
        constrained += trace_row;
        constrained.makeCompressed();
        Eigen::SparseLU<SparseC> solver;
        solver.compute(constrained);
        if (solver.info() != Eigen::Success) throw NumericalError("Liouvillian factorisation failed");
        vec_rho = solver.solve(rhs);
    }
    if (!vec_rho.allFinite()) throw NumericalError("steady-state solve produced non-finite values");

    SteadyState out;
    out.residual = (liouvillian * vec_rho).norm() / (scale * vec_rho.norm());
    if (!(out.residual < options.residual_tolerance))
        throw NumericalError("steady state did not converge, residual " + std::to_string(out.residual));

    Eigen::MatrixXcd rho = Eigen::Map<Eigen::MatrixXcd>(vec_rho.data(), static_cast<Eigen::Index>(d),
                                                        static_cast<Eigen::Index>(d));
    rho = 0.5 * (rho + rho.adjoint()).eval();
    const Complex trace = rho.trace();
    rho /= trace;

    const Eigen::MatrixXcd a_dense(a);
    out.field = (rho * a_dense).trace();
    out.photon_number = (rho * Eigen::MatrixXcd(a_dag * a)).trace().real();
    for (const auto& atom_projectors : projectors) {
        out.populations.emplace_back();
        for (const auto& proj : atom_projectors) {
            const double p = (rho * Eigen::MatrixXcd(proj)).trace().real();
            out.populations.back().push_back(p);
            out.excited_population += p;
        }
    }
    out.rho = std::move(rho);
    return out;
}

double oracle_reflectivity(const SystemSpec& spec, double probe, const LindbladOptions& options) {
    if (!(spec.drive_amplitude > 0.0)) throw DomainError("oracle reflectivity needs a non-zero drive");
    const SteadyState ss = lindblad_steady_state(spec, probe, options);
    const Complex r = std::sqrt(spec.cavity.kappa_wg()) * ss.field / spec.drive_amplitude - 1.0;
    return std::norm(r);
}

double min_eigenvalue(const Eigen::MatrixXcd& rho) {
    const Eigen::MatrixXcd herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

} // namespace cavqed
