#pragma once

#include "rasmix/model.hpp"

namespace rasmix {

// Inter-species coupling weight in the per-species orbital equations.  The
// total Hamiltonian counts each unordered species pair once with full weight;
// equivalently, one half for each of the two orderings (kappa,gamma) and
// (gamma,kappa), which are equal by symmetry of the pair potential.  The
// per-species equations therefore see each partner with full weight.  This
// convention is pinned by the dense finite-difference derivative oracle in
// the test suite and by the mean-field-limit benchmark energy.
inline constexpr double kInterPairWeight = 1.0;

// Mean fields on the grid:
//   V[kappa][k*M + l](x)        = int v_kappa(x,x') conj(phi_k) phi_l (x') dx'
//   W[{kappa,gamma}][j*Mg + l](x) = int w(x,y) conj(phi_j^gamma) phi_l^gamma (y) dy
// The W key is ordered (field acting on kappa, generated by gamma != kappa).
struct MeanFieldOps {
    std::vector<std::vector<VectorXcd>> V;
    std::map<std::pair<int, int>, std::vector<VectorXcd>> W;
};

MeanFieldOps build_mean_fields(const WaveFunction& wf, const HamiltonianTerms& terms);

// Result of one gauge (eta) linear solve.  eta is the full M x M matrix:
// anti-Hermitian, zero inside P1 and inside P2, populated on the off-blocks.
struct EtaResult {
    MatrixXcd eta;
    double residual = 0.0;    // || LHS * solution - RHS ||
    bool regularized = false; // rank-deficient system solved in least squares
};

EtaResult solve_eta_even(int kappa, const Densities& dens, const ATensor& a,
                         const OrbitalMatrixElements& m, const ConfigSpace& space);

EtaResult solve_eta_general(int kappa, const ZetaTensors& zeta,
                            const OrbitalMatrixElements& m, const ConfigSpace& space);

// dC/dt such that i dC/dt equals the configuration-space right-hand side
// (one-body h - i eta, intra-species pair terms, inter-species pair terms).
AmpVec amplitude_rhs(const WaveFunction& wf, const HamiltonianTerms& terms,
                     const std::vector<MatrixXcd>& eta, const ConfigSpace& space);

// Same contraction from preassembled matrix elements; returns i dC/dt.
AmpVec amplitude_apply_h(const OrbitalMatrixElements& m, const std::vector<MatrixXcd>& eta,
                         const AmpVec& amps, const ConfigSpace& space);

// Q-space part of the orbital derivatives: the columns Q |phi_dot_i> (real
// time), i.e. -i Q[bracket] rho1^{-T} with the regularized density inverse.
MatrixXcd qspace_rhs(int kappa, const WaveFunction& wf, const HamiltonianTerms& terms,
                     const MeanFieldOps& mf, const Densities& dens);

// Regularized inverse of a Hermitian density block: eigenvalues lambda are
// replaced by lambda + eps exp(-lambda/eps) before inversion.
MatrixXcd regularized_inverse(const MatrixXcd& herm, double eps = 1e-8);

struct Derivatives {
    AmpVec amp_dot;                      // dC/dt (real-time convention)
    std::vector<MatrixXcd> orbital_dot;  // per species, n x M (real time)
    double energy = 0.0;                 // energy at the evaluation point
    double energy_imag = 0.0;
    double eta_residual = 0.0;  // max over species
    bool eta_regularized = false;
};

// Full coupled right-hand side: gauge solves per scheme, amplitude equation,
// P-space rotation plus Q-space orbital equation.
Derivatives assemble_derivatives(const WaveFunction& wf, const HamiltonianTerms& terms);

} // namespace rasmix
