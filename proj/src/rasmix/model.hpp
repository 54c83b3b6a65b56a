#pragma once

#include "rasmix/densities.hpp"
#include "rasmix/grid.hpp"

#include <memory>

namespace rasmix {

struct SpeciesParams {
    int count = 0;
    double mass = 1.0;
    double lambda = 0.0;  // intra-species pair coupling
    RasSpec ras;
};

// Trapped mixture with harmonic pair couplings:
//   H = sum_kappa sum_i [p^2/2m + m w^2 x^2/2]
//     + sum_kappa lambda_kappa sum_{i<j} (x_i - x_j)^2
//     + sum_{kappa<gamma} lambda_{kappa gamma} sum_{i,j} (x_i - y_j)^2
struct ModelParams {
    double omega = 1.0;
    std::vector<SpeciesParams> species;
    MatrixXd lambda_inter;  // symmetric, zero diagonal

    int n_species() const { return static_cast<int>(species.size()); }
};

// Grid-sampled pieces of the Hamiltonian.  The pair potentials are quadratic,
// which enables a separable matrix-element path; the sampled grids keep the
// general (direct-quadrature) path available.
struct HamiltonianTerms {
    DvrGrid grid;
    std::vector<MatrixXd> h;                    // per species: kinetic/m + trap
    std::vector<MatrixXd> v;                    // per species: lambda (x-x')^2
    std::map<std::pair<int, int>, MatrixXd> w;  // kappa < gamma: lambda_kg (x-y)^2
    std::vector<double> lambda_intra;
    MatrixXd lambda_inter;
};

HamiltonianTerms build_him_terms(const ModelParams& model, const DvrGrid& grid);

// Exact ground-state energy of the two-species harmonic-interaction model
// (normal-mode decomposition).  Throws for K != 2 or an unbound combination
// of couplings (negative squared normal-mode frequency).
double exact_him_energy(const ModelParams& model);

struct WaveFunction {
    std::shared_ptr<const ConfigSpace> space;
    AmpVec amps;
    std::vector<MatrixXcd> orbitals;  // per species: n x M, column = orbital

    int n_species() const { return static_cast<int>(orbitals.size()); }
};

// Orbital-basis matrix elements; composite pair slots are (creation,
// annihilation), matching the density storage:
//   h[kappa](p, q), v[kappa]((i*M+j), (k*M+l)) = v^{ik}_{jl},
//   w[{kappa,gamma}]((p*Mk+q), (r*Mg+s)) = w^{pr}_{qs} (kappa < gamma).
struct OrbitalMatrixElements {
    std::vector<MatrixXcd> h;
    std::vector<MatrixXcd> v;
    std::map<std::pair<int, int>, MatrixXcd> w;
};

// force_direct bypasses the separable quadratic-potential path and integrates
// the sampled pair potentials directly (slower; used for cross-checks).
OrbitalMatrixElements build_matrix_elements(const WaveFunction& wf,
                                            const HamiltonianTerms& terms,
                                            bool force_direct = false);

// w block with kappa-first row slots regardless of storage order.
MatrixXcd inter_w_block(const OrbitalMatrixElements& m, int kappa, int gamma);

// E = sum_k [h.rho1 + v.rho2/2] + sum_{k<g} w.rho_inter; returns the real part
// and exposes the (rounding-level) imaginary residue as a diagnostic.
double energy_expectation(const WaveFunction& wf, const HamiltonianTerms& terms,
                          const Densities& dens, double* imag_residue = nullptr);

// Same contraction from preassembled matrix elements (propagation hot path).
double energy_from_elements(const OrbitalMatrixElements& m, const Densities& dens,
                            double* imag_residue = nullptr);

} // namespace rasmix
