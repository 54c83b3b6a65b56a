#pragma once

#include "rasmix/fockspace.hpp"

#include <map>
#include <utility>

namespace rasmix {

// Index conventions for the reduced densities (creation index listed first in
// each slot):
//   rho1(i, j)                    = < b+_i b_j >
//   rho2((i*M + j), (k*M + l))    = < b+_i b+_k b_l b_j >
//   rho_inter (kappa < gamma), ((i*Mk + k), (j*Mg + l)) = < b+_i b_k  b+_j b_l >
// i.e. composite pair slots are always (creation, annihilation), matching the
// storage of the orbital-basis matrix elements.
MatrixXcd build_rho1(int kappa, const AmpVec& amps, const ConfigSpace& space);
MatrixXcd build_rho2(int kappa, const AmpVec& amps, const ConfigSpace& space);
MatrixXcd build_rho_inter(int kappa, int gamma, const AmpVec& amps, const ConfigSpace& space);

struct Densities {
    std::vector<MatrixXcd> rho1;
    std::vector<MatrixXcd> rho2;
    std::map<std::pair<int, int>, MatrixXcd> rho_inter;  // keys kappa < gamma
};

Densities build_densities(const AmpVec& amps, const ConfigSpace& space);

// <..| b+_i b_k b+_j b_l |..> with (i,k) on species kappa and (j,l) on gamma,
// regardless of which of kappa/gamma is smaller (transposes the stored block).
cxd rho_inter_entry(const Densities& d, int kappa, int gamma, int i, int k, int j, int l,
                    const ConfigSpace& space);

// Config-basis cross Gram over one species' index:
//   G(d, s) = sum over all other species' indices of conj(X[.. d ..]) Y[.. s ..]
MatrixXcd config_cross_gram(int kappa, const AmpVec& X, const AmpVec& Y,
                            const ConfigSpace& space);

// Gauge metric of the General scheme.  All tensors are indexed by flattened
// raising pairs p = (p2_orb - m1)*m1 + p1_orb over (P2, P1) orbital pairs:
//   zeta4(q, p)                 = < Psi | b+_{i'} b_{j''} (1 - Pi) b+_{k''} b_{l'} | Psi >
//       with q = pair(j'', i'), p = pair(k'', l')
//   zeta6_intra(q, chain)       = same bra, acting with b+_k b+_m b_n b_l,
//       chain key ((k*M + m)*M + n)*M + l
//   zeta6_inter[gamma](q, p*Mg*Mg + (kg*Mg + lg)) = same bra, acting with
//       b+_{k''} b_{l'} on kappa and b+_{kg} b_{lg} on gamma
// (1 - Pi) projects onto the boundary block (P2 total = nmax + 1); everything
// is zero for an untruncated (full-CI) species.
struct ZetaTensors {
    int kappa = 0;
    int n_pairs = 0;  // m1 * m2
    MatrixXcd zeta4;
    MatrixXcd zeta6_intra;
    std::map<int, MatrixXcd> zeta6_inter;
};

ZetaTensors build_zeta(int kappa, const AmpVec& amps, const ConfigSpace& space);

// Coefficient matrix of the EvenOnly-scheme gauge equations,
//   A(q, p) = rho1(i', l') delta_{j'' k''} - rho1(k'', j'') delta_{l' i'}
// with q = pair(j'', i') and p = pair(k'', l').
struct ATensor {
    int kappa = 0;
    int n_pairs = 0;
    MatrixXcd mat;
};

ATensor build_a_tensor(int kappa, const MatrixXcd& rho1, const RasSpec& spec);

// Flattened index of the raising pair (p2_orb in P2, p1_orb in P1).
inline int raising_pair_index(const RasSpec& spec, int p2_orb, int p1_orb) {
    return (p2_orb - spec.m1) * spec.m1 + p1_orb;
}

} // namespace rasmix
