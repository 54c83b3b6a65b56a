#include "rasmix/eom.hpp"

#include <cmath>
#include <functional>

namespace rasmix {

namespace {

constexpr int kDenseSpeciesLimit = 4096;  // per-species dense operator cutoff
constexpr cxd kI{0.0, 1.0};

// out[dst-slice] += c * f * in[src-slice] over one species' transition list.
void apply_table_scaled(int kappa, const std::vector<Trans>& table, cxd c, const AmpVec& in,
                        AmpVec& out, const ConfigSpace& space) {
    const std::size_t Sk = space.species[kappa].size();
    const std::size_t stride = space.strides[kappa];
    const std::size_t block = Sk * stride;
    const std::size_t outer = space.product_size / block;
    for (const Trans& t : table) {
        const cxd cf = c * t.f;
        for (std::size_t o = 0; o < outer; ++o) {
            const std::size_t base = o * block;
            out.segment(base + t.dst * stride, stride) +=
                cf * in.segment(base + t.src * stride, stride);
        }
    }
}

// Dense configuration-basis matrix of the one-species part
//   sum_{ij} hm(i,j) b+_i b_j + 1/2 sum_{ikjl} v[(ij),(kl)] b+_i b+_k b_l b_j
MatrixXcd species_effective_matrix(const SpeciesSpace& sp, const MatrixXcd& hm,
                                   const MatrixXcd& vmat) {
    const int M = sp.M;
    MatrixXcd T = MatrixXcd::Zero(sp.size(), sp.size());
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) {
            const cxd c = hm(i, j);
            if (c == 0.0) continue;
            for (const Trans& t : sp.obt[static_cast<std::size_t>(i) * M + j])
                T(t.dst, t.src) += c * t.f;
        }
    for (int i = 0; i < M; ++i)
        for (int k = 0; k < M; ++k)
            for (int l = 0; l < M; ++l)
                for (int j = 0; j < M; ++j) {
                    const cxd c = 0.5 * vmat(i * M + j, k * M + l);
                    if (c == 0.0) continue;
                    const std::size_t key =
                        ((static_cast<std::size_t>(i) * M + k) * M + l) * M + j;
                    for (const Trans& t : sp.tbt[key]) T(t.dst, t.src) += c * t.f;
                }
    return T;
}

// Dense configuration-basis matrix of sum_{(rs)} coeff(rs) b+_r b_s for one species.
MatrixXcd species_weighted_obt_matrix(const SpeciesSpace& sp,
                                      const std::function<cxd(int, int)>& coeff) {
    const int M = sp.M;
    MatrixXcd T = MatrixXcd::Zero(sp.size(), sp.size());
    for (int r = 0; r < M; ++r)
        for (int s = 0; s < M; ++s) {
            const cxd c = coeff(r, s);
            if (c == 0.0) continue;
            for (const Trans& t : sp.obt[static_cast<std::size_t>(r) * M + s])
                T(t.dst, t.src) += c * t.f;
        }
    return T;
}

} // namespace

MeanFieldOps build_mean_fields(const WaveFunction& wf, const HamiltonianTerms& terms) {
    MeanFieldOps mf;
    const int K = wf.n_species();
    mf.V.resize(K);
    for (int k = 0; k < K; ++k) {
        const MatrixXcd& phi = wf.orbitals[k];
        const int M = static_cast<int>(phi.cols());
        mf.V[k].resize(static_cast<std::size_t>(M) * M);
        const MatrixXcd vg = terms.v[k].cast<cxd>();
        for (int a = 0; a < M; ++a)
            for (int b = 0; b < M; ++b)
                mf.V[k][static_cast<std::size_t>(a) * M + b] =
                    vg * phi.col(a).conjugate().cwiseProduct(phi.col(b));
    }
    for (int k = 0; k < K; ++k)
        for (int g = 0; g < K; ++g) {
            if (k == g) continue;
            const MatrixXd& wgrid = (k < g) ? terms.w.at({k, g}) : terms.w.at({g, k});
            const MatrixXcd wg = wgrid.cast<cxd>();  // symmetric sample, shared grid
            const MatrixXcd& phig = wf.orbitals[g];
            const int Mg = static_cast<int>(phig.cols());
            std::vector<VectorXcd> fields(static_cast<std::size_t>(Mg) * Mg);
            for (int a = 0; a < Mg; ++a)
                for (int b = 0; b < Mg; ++b)
                    fields[static_cast<std::size_t>(a) * Mg + b] =
                        wg * phig.col(a).conjugate().cwiseProduct(phig.col(b));
            mf.W[{k, g}] = std::move(fields);
        }
    return mf;
}

MatrixXcd regularized_inverse(const MatrixXcd& herm, double eps) {
    const MatrixXcd sym = 0.5 * (herm + herm.adjoint());
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(sym);
    VectorXd lam = es.eigenvalues();
    for (int i = 0; i < lam.size(); ++i)
        lam[i] = 1.0 / (lam[i] + eps * std::exp(-lam[i] / eps));
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

EtaResult solve_eta_even(int kappa, const Densities& dens, const ATensor& a,
                         const OrbitalMatrixElements& m, const ConfigSpace& space) {
    const SpeciesSpace& sp = space.species[kappa];
    const RasSpec& spec = sp.spec;
    const int M = sp.M;
    const int np = a.n_pairs;
    EtaResult r;
    r.eta = MatrixXcd::Zero(M, M);
    if (np == 0) return r;

    const MatrixXcd& h = m.h[kappa];
    const MatrixXcd& v = m.v[kappa];
    const MatrixXcd& rho2 = dens.rho2[kappa];

    VectorXcd b = VectorXcd::Zero(np);
    for (int j2 = spec.m1; j2 < M; ++j2)
        for (int i1 = 0; i1 < spec.m1; ++i1) {
            const int q = raising_pair_index(spec, j2, i1);
            cxd acc(0, 0);
            // one-body part, off-block entries of h against the A coefficients
            for (int k2 = spec.m1; k2 < M; ++k2)
                for (int l1 = 0; l1 < spec.m1; ++l1)
                    acc += h(k2, l1) * a.mat(q, raising_pair_index(spec, k2, l1));
            // intra-species pair part
            for (int k = 0; k < M; ++k)
                for (int l = 0; l < M; ++l)
                    for (int n = 0; n < M; ++n) {
                        acc += v(j2 * M + k, n * M + l) * rho2(i1 * M + k, n * M + l);
                        acc -= v(k * M + i1, l * M + n) * rho2(k * M + j2, l * M + n);
                    }
            // inter-species part
            for (int g = 0; g < space.n_species(); ++g) {
                if (g == kappa) continue;
                const MatrixXcd wblk = inter_w_block(m, kappa, g);
                const int Mg = space.species[g].M;
                cxd wacc(0, 0);
                for (int kk = 0; kk < M; ++kk)
                    for (int kg = 0; kg < Mg; ++kg)
                        for (int lg = 0; lg < Mg; ++lg) {
                            wacc += wblk(j2 * M + kk, kg * Mg + lg) *
                                    rho_inter_entry(dens, kappa, g, i1, kk, kg, lg, space);
                            wacc -= wblk(kk * M + i1, kg * Mg + lg) *
                                    rho_inter_entry(dens, kappa, g, kk, j2, kg, lg, space);
                        }
                acc += kInterPairWeight * wacc;
            }
            b[q] = acc;
        }

    Eigen::CompleteOrthogonalDecomposition<MatrixXcd> cod(a.mat);
    const VectorXcd theta = cod.solve(b);
    r.residual = (a.mat * theta - b).norm();
    r.regularized = cod.rank() < np;
    for (int k2 = spec.m1; k2 < M; ++k2)
        for (int l1 = 0; l1 < spec.m1; ++l1) {
            const cxd e = -kI * theta[raising_pair_index(spec, k2, l1)];  // eta = -i theta
            r.eta(k2, l1) = e;
            r.eta(l1, k2) = -std::conj(e);
        }
    return r;
}

EtaResult solve_eta_general(int kappa, const ZetaTensors& zeta,
                            const OrbitalMatrixElements& m, const ConfigSpace& space) {
    const SpeciesSpace& sp = space.species[kappa];
    const RasSpec& spec = sp.spec;
    const int M = sp.M;
    const int np = zeta.n_pairs;
    EtaResult r;
    r.eta = MatrixXcd::Zero(M, M);
    if (np == 0 || sp.ext_size() == 0) return r;  // full CI: gauge fully fixed

    const MatrixXcd& h = m.h[kappa];
    const MatrixXcd& v = m.v[kappa];

    // RHS: boundary-block coupling of the one-body, intra-pair and inter-pair
    // Hamiltonian pieces.
    VectorXcd hoff(np);
    for (int k2 = spec.m1; k2 < M; ++k2)
        for (int l1 = 0; l1 < spec.m1; ++l1)
            hoff[raising_pair_index(spec, k2, l1)] = h(k2, l1);
    VectorXcd rhs = zeta.zeta4 * hoff;

    for (int i = 0; i < M; ++i)
        for (int k = 0; k < M; ++k)
            for (int l = 0; l < M; ++l)
                for (int j = 0; j < M; ++j) {
                    const cxd c = 0.5 * v(i * M + j, k * M + l);
                    if (c == 0.0) continue;
                    const std::size_t key =
                        ((static_cast<std::size_t>(i) * M + k) * M + l) * M + j;
                    rhs += c * zeta.zeta6_intra.col(key);
                }

    for (const auto& [g, zi] : zeta.zeta6_inter) {
        const MatrixXcd wblk = inter_w_block(m, kappa, g);
        const int Mg = space.species[g].M;
        for (int k2 = spec.m1; k2 < M; ++k2)
            for (int l1 = 0; l1 < spec.m1; ++l1) {
                const int p = raising_pair_index(spec, k2, l1);
                for (int jg = 0; jg < Mg; ++jg)
                    for (int lg = 0; lg < Mg; ++lg) {
                        const cxd c = kInterPairWeight * wblk(k2 * M + l1, jg * Mg + lg);
                        if (c == 0.0) continue;
                        rhs += c * zi.col(static_cast<std::size_t>(p) * Mg * Mg + jg * Mg + lg);
                    }
            }
    }

    Eigen::CompleteOrthogonalDecomposition<MatrixXcd> cod(zeta.zeta4);
    const VectorXcd theta = cod.solve(rhs);
    r.residual = (zeta.zeta4 * theta - rhs).norm();
    r.regularized = cod.rank() < np;
    for (int k2 = spec.m1; k2 < M; ++k2)
        for (int l1 = 0; l1 < spec.m1; ++l1) {
            const cxd e = -kI * theta[raising_pair_index(spec, k2, l1)];
            r.eta(k2, l1) = e;
            r.eta(l1, k2) = -std::conj(e);
        }
    return r;
}

AmpVec amplitude_apply_h(const OrbitalMatrixElements& m, const std::vector<MatrixXcd>& eta,
                         const AmpVec& amps, const ConfigSpace& space) {
    const int K = space.n_species();
    AmpVec out = AmpVec::Zero(amps.size());

    for (int k = 0; k < K; ++k) {
        const SpeciesSpace& sp = space.species[k];
        const MatrixXcd hm = m.h[k] - kI * eta[k];
        if (sp.size() <= kDenseSpeciesLimit) {
            const MatrixXcd T = species_effective_matrix(sp, hm, m.v[k]);
            apply_species_dense(k, T, amps, out, space);
        } else {
            const int M = sp.M;
            for (int i = 0; i < M; ++i)
                for (int j = 0; j < M; ++j)
                    apply_table_scaled(k, sp.obt[static_cast<std::size_t>(i) * M + j],
                                       hm(i, j), amps, out, space);
            for (int i = 0; i < M; ++i)
                for (int kk = 0; kk < M; ++kk)
                    for (int l = 0; l < M; ++l)
                        for (int j = 0; j < M; ++j) {
                            const std::size_t key =
                                ((static_cast<std::size_t>(i) * M + kk) * M + l) * M + j;
                            apply_table_scaled(k, sp.tbt[key],
                                               0.5 * m.v[k](i * M + j, kk * M + l), amps, out,
                                               space);
                        }
        }
    }

    // Inter-species pair couplings: each unordered pair once, full weight.
    AmpVec z(amps.size());
    for (int k = 0; k < K; ++k)
        for (int g = k + 1; g < K; ++g) {
            const MatrixXcd& wblk = m.w.at({k, g});
            const SpeciesSpace& spk = space.species[k];
            const SpeciesSpace& spg = space.species[g];
            const int Mk = spk.M, Mg = spg.M;
            // Outer loop over the species whose partner-side dense operator
            // is cheaper to apply.
            const bool outer_k = double(Mk) * Mk * spg.size() <= double(Mg) * Mg * spk.size();
            const int a = outer_k ? k : g;
            const int bsp = outer_k ? g : k;
            const SpeciesSpace& spa = outer_k ? spk : spg;
            const SpeciesSpace& spb = outer_k ? spg : spk;
            const int Ma = spa.M, Mb = spb.M;
            if (spb.size() <= kDenseSpeciesLimit) {
                for (int p = 0; p < Ma; ++p)
                    for (int q = 0; q < Ma; ++q) {
                        const auto& tbl = spa.obt[static_cast<std::size_t>(p) * Ma + q];
                        if (tbl.empty()) continue;
                        const MatrixXcd Hb = species_weighted_obt_matrix(
                            spb, [&](int rr, int ss) {
                                return outer_k ? wblk(p * Mk + q, rr * Mg + ss)
                                               : wblk(rr * Mk + ss, p * Mg + q);
                            });
                        z.setZero();
                        apply_species_dense(bsp, Hb, amps, z, space);
                        apply_species_table(a, tbl, z, out, space);
                    }
            } else {
                for (int p = 0; p < Mk; ++p)
                    for (int q = 0; q < Mk; ++q)
                        for (int rr = 0; rr < Mg; ++rr)
                            for (int ss = 0; ss < Mg; ++ss) {
                                const cxd c = wblk(p * Mk + q, rr * Mg + ss);
                                if (c == 0.0) continue;
                                z.setZero();
                                apply_table_scaled(
                                    g, spg.obt[static_cast<std::size_t>(rr) * Mg + ss], c,
                                    amps, z, space);
                                apply_species_table(
                                    k, spk.obt[static_cast<std::size_t>(p) * Mk + q], z, out,
                                    space);
                            }
            }
        }
    return out;
}

AmpVec amplitude_rhs(const WaveFunction& wf, const HamiltonianTerms& terms,
                     const std::vector<MatrixXcd>& eta, const ConfigSpace& space) {
    const OrbitalMatrixElements m = build_matrix_elements(wf, terms);
    return -kI * amplitude_apply_h(m, eta, wf.amps, space);
}

MatrixXcd qspace_rhs(int kappa, const WaveFunction& wf, const HamiltonianTerms& terms,
                     const MeanFieldOps& mf, const Densities& dens) {
    const MatrixXcd& phi = wf.orbitals[kappa];
    const int M = static_cast<int>(phi.cols());
    const MatrixXcd& rho1 = dens.rho1[kappa];
    const MatrixXcd& rho2 = dens.rho2[kappa];

    // Bracket vectors: [h phi rho1 + V-mean-fields against rho2 + W-mean-fields
    // against the inter-species density], one column per P-space orbital.
    MatrixXcd B = terms.h[kappa].cast<cxd>() * phi * rho1.transpose();

    MatrixXcd slice(M, M);
    for (int k = 0; k < M; ++k)
        for (int l = 0; l < M; ++l) {
            for (int i = 0; i < M; ++i)
                for (int j = 0; j < M; ++j) slice(i, j) = rho2(i * M + j, k * M + l);
            if (slice.isZero(0)) continue;
            B += mf.V[kappa][static_cast<std::size_t>(k) * M + l].asDiagonal() * phi *
                 slice.transpose();
        }

    const ConfigSpace& space = *wf.space;
    for (int g = 0; g < space.n_species(); ++g) {
        if (g == kappa) continue;
        const int Mg = space.species[g].M;
        const auto& fields = mf.W.at({kappa, g});
        for (int jg = 0; jg < Mg; ++jg)
            for (int lg = 0; lg < Mg; ++lg) {
                for (int i = 0; i < M; ++i)
                    for (int j = 0; j < M; ++j)
                        slice(i, j) = rho_inter_entry(dens, kappa, g, i, j, jg, lg, space);
                B += kInterPairWeight *
                     (fields[static_cast<std::size_t>(jg) * Mg + lg].asDiagonal() * phi *
                      slice.transpose());
            }
    }

    // Right-multiply by the regularized inverse of rho1^T, then project onto
    // the orthogonal complement of the occupied orbitals (exact Gram inverse
    // so near-orthonormal inputs stay clean).  The projector commutes with
    // the right-multiplication; applying it last keeps the result orthogonal
    // to the orbitals at machine precision relative to its own magnitude.
    B *= regularized_inverse(rho1.transpose());
    const MatrixXcd S = phi.adjoint() * phi;
    B -= phi * S.ldlt().solve(phi.adjoint() * B);
    return -kI * B;
}

Derivatives assemble_derivatives(const WaveFunction& wf, const HamiltonianTerms& terms) {
    const ConfigSpace& space = *wf.space;
    const int K = space.n_species();
    Derivatives d;

    const OrbitalMatrixElements m = build_matrix_elements(wf, terms);
    const Densities dens = build_densities(wf.amps, space);

    std::vector<MatrixXcd> eta(K);
    for (int k = 0; k < K; ++k) {
        const SpeciesSpace& sp = space.species[k];
        EtaResult er;
        if (sp.spec.m1 * sp.spec.m2 == 0) {
            er.eta = MatrixXcd::Zero(sp.M, sp.M);
        } else if (sp.spec.scheme == RasScheme::EvenOnly) {
            er = solve_eta_even(k, dens, build_a_tensor(k, dens.rho1[k], sp.spec), m, space);
        } else {
            er = solve_eta_general(k, build_zeta(k, wf.amps, space), m, space);
        }
        d.eta_residual = std::max(d.eta_residual, er.residual);
        d.eta_regularized = d.eta_regularized || er.regularized;
        eta[k] = std::move(er.eta);
    }

    d.amp_dot = -kI * amplitude_apply_h(m, eta, wf.amps, space);

    const MeanFieldOps mf = build_mean_fields(wf, terms);
    d.orbital_dot.resize(K);
    for (int k = 0; k < K; ++k)
        d.orbital_dot[k] = wf.orbitals[k] * eta[k] + qspace_rhs(k, wf, terms, mf, dens);

    d.energy = energy_from_elements(m, dens, &d.energy_imag);
    return d;
}

} // namespace rasmix
