#pragma once

// Brute-force checks of the analytic reflectivity.
//
// linear_response_solve assembles the linearized Heisenberg-Langevin system
// for <a> and every <sigma> and solves it directly. lindblad_steady_state
// builds the full master equation on a truncated Fock space with a coherent
// drive H_drive = i sqrt(kappa_wg) (a_in a^dag - a_in a), in the frame rotating
// at the probe frequency, and returns the stationary density operator.

#include <Eigen/Dense>
#include <vector>

#include "cavqed/qed_core.hpp"

namespace cavqed {

enum class DecayModel {
    Individual, // one jump operator sqrt(gamma_i) sigma_i per excited state
    Cumulative  // one jump operator sum_i sqrt(gamma_i) sigma_i per atom
};

struct SystemSpec {
    CavityParams cavity;
    EmitterSet emitters;
    int fock_cutoff = 3;
    double drive_amplitude = 0.0; // a_in, sqrt(photons / us)
    DecayModel decay = DecayModel::Individual;
};

struct LindbladOptions {
    std::size_t max_dimension = 4096;     // Hilbert-space cap
    std::size_t dense_liouvillian = 1024; // dense LU up to this Liouvillian size
    double residual_tolerance = 1e-10;
};

struct SteadyState {
    Complex field;                                  // <a>
    std::vector<std::vector<double>> populations;   // per atom, per excited state
    double excited_population = 0.0;                // summed over atoms and lines
    double photon_number = 0.0;                     // <a^dag a>
    double residual = 0.0;                          // ||L rho|| / max|L_ij|
    Eigen::MatrixXcd rho;
};

// sqrt(kappa_wg) <a> / a_in - 1 from the linear system at the probe frequency.
Complex linear_response_solve(double probe, const CavityParams& cavity, const EmitterSet& emitters);

std::size_t hilbert_dimension(const SystemSpec& spec);

SteadyState lindblad_steady_state(const SystemSpec& spec, double probe, const LindbladOptions& options = {});

// |sqrt(kappa_wg) <a> / a_in - 1|^2; needs a non-zero drive.
double oracle_reflectivity(const SystemSpec& spec, double probe, const LindbladOptions& options = {});

// Smallest eigenvalue of the Hermitian part of rho.
double min_eigenvalue(const Eigen::MatrixXcd& rho);

} // namespace cavqed
