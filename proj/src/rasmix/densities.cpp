#include "rasmix/densities.hpp"

namespace rasmix {

namespace {

using RowMat = Eigen::Matrix<cxd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

MatrixXcd rho1_from_gram(const SpeciesSpace& sp, const MatrixXcd& G) {
    MatrixXcd r = MatrixXcd::Zero(sp.M, sp.M);
    for (int i = 0; i < sp.M; ++i)
        for (int j = 0; j < sp.M; ++j) {
            cxd acc(0, 0);
            for (const Trans& t : sp.obt[static_cast<std::size_t>(i) * sp.M + j])
                acc += t.f * G(t.dst, t.src);
            r(i, j) = acc;
        }
    return r;
}

MatrixXcd rho2_from_gram(const SpeciesSpace& sp, const MatrixXcd& G) {
    const int M = sp.M;
    MatrixXcd r = MatrixXcd::Zero(M * M, M * M);
    for (int i = 0; i < M; ++i)
        for (int k = 0; k < M; ++k)
            for (int l = 0; l < M; ++l)
                for (int j = 0; j < M; ++j) {
                    const std::size_t key =
                        ((static_cast<std::size_t>(i) * M + k) * M + l) * M + j;
                    cxd acc(0, 0);
                    for (const Trans& t : sp.tbt[key]) acc += t.f * G(t.dst, t.src);
                    r(i * M + j, k * M + l) = acc;
                }
    return r;
}

} // namespace

MatrixXcd config_cross_gram(int kappa, const AmpVec& X, const AmpVec& Y,
                            const ConfigSpace& space) {
    const std::size_t Sk = space.species[kappa].size();
    const std::size_t stride = space.strides[kappa];
    const std::size_t block = Sk * stride;
    const std::size_t outer = space.product_size / block;
    MatrixXcd G = MatrixXcd::Zero(Sk, Sk);
    for (std::size_t o = 0; o < outer; ++o) {
        Eigen::Map<const RowMat> Xm(X.data() + o * block, Sk, stride);
        Eigen::Map<const RowMat> Ym(Y.data() + o * block, Sk, stride);
        G.noalias() += Xm.conjugate() * Ym.transpose();
    }
    return G;
}

MatrixXcd build_rho1(int kappa, const AmpVec& amps, const ConfigSpace& space) {
    return rho1_from_gram(space.species[kappa], config_cross_gram(kappa, amps, amps, space));
}

MatrixXcd build_rho2(int kappa, const AmpVec& amps, const ConfigSpace& space) {
    return rho2_from_gram(space.species[kappa], config_cross_gram(kappa, amps, amps, space));
}

MatrixXcd build_rho_inter(int kappa, int gamma, const AmpVec& amps, const ConfigSpace& space) {
    if (kappa == gamma) throw InvalidConfigError("build_rho_inter needs two distinct species");
    const SpeciesSpace& spk = space.species[kappa];
    const SpeciesSpace& spg = space.species[gamma];
    const int Mk = spk.M, Mg = spg.M;
    MatrixXcd R = MatrixXcd::Zero(Mk * Mk, Mg * Mg);

    // Apply the one-body pairs of whichever species makes the Gram over the
    // other one cheaper; the two operators commute, so order is free.
    const double cost_k = double(Mk) * Mk * spg.size();
    const double cost_g = double(Mg) * Mg * spk.size();
    AmpVec Y(amps.size());
    if (cost_k <= cost_g) {
        for (int i = 0; i < Mk; ++i)
            for (int k = 0; k < Mk; ++k) {
                const auto& tbl = spk.obt[static_cast<std::size_t>(i) * Mk + k];
                if (tbl.empty()) continue;
                Y.setZero();
                apply_species_table(kappa, tbl, amps, Y, space);
                const MatrixXcd G = config_cross_gram(gamma, amps, Y, space);
                for (int j = 0; j < Mg; ++j)
                    for (int l = 0; l < Mg; ++l) {
                        cxd acc(0, 0);
                        for (const Trans& t : spg.obt[static_cast<std::size_t>(j) * Mg + l])
                            acc += t.f * G(t.dst, t.src);
                        R(i * Mk + k, j * Mg + l) = acc;
                    }
            }
    } else {
        for (int j = 0; j < Mg; ++j)
            for (int l = 0; l < Mg; ++l) {
                const auto& tbl = spg.obt[static_cast<std::size_t>(j) * Mg + l];
                if (tbl.empty()) continue;
                Y.setZero();
                apply_species_table(gamma, tbl, amps, Y, space);
                const MatrixXcd G = config_cross_gram(kappa, amps, Y, space);
                for (int i = 0; i < Mk; ++i)
                    for (int k = 0; k < Mk; ++k) {
                        cxd acc(0, 0);
                        for (const Trans& t : spk.obt[static_cast<std::size_t>(i) * Mk + k])
                            acc += t.f * G(t.dst, t.src);
                        R(i * Mk + k, j * Mg + l) = acc;
                    }
            }
    }
    return R;
}

Densities build_densities(const AmpVec& amps, const ConfigSpace& space) {
    Densities d;
    const int K = space.n_species();
    d.rho1.resize(K);
    d.rho2.resize(K);
    for (int k = 0; k < K; ++k) {
        const MatrixXcd G = config_cross_gram(k, amps, amps, space);
        d.rho1[k] = rho1_from_gram(space.species[k], G);
        d.rho2[k] = rho2_from_gram(space.species[k], G);
    }
    for (int k = 0; k < K; ++k)
        for (int g = k + 1; g < K; ++g)
            d.rho_inter[{k, g}] = build_rho_inter(k, g, amps, space);
    return d;
}

cxd rho_inter_entry(const Densities& d, int kappa, int gamma, int i, int k, int j, int l,
                    const ConfigSpace& space) {
    const int Mk = space.species[kappa].M;
    const int Mg = space.species[gamma].M;
    if (kappa < gamma) return d.rho_inter.at({kappa, gamma})(i * Mk + k, j * Mg + l);
    return d.rho_inter.at({gamma, kappa})(j * Mg + l, i * Mk + k);
}

namespace {

// Layout of product vectors whose kappa-axis is replaced by the boundary
// block of that species (everything else keeps its admitted basis).
struct ExtLayout {
    int kappa;
    std::size_t len = 0;
    std::vector<std::size_t> strides;  // per species, in the ext layout
};

ExtLayout make_ext_layout(int kappa, const ConfigSpace& space) {
    ExtLayout L;
    L.kappa = kappa;
    const int K = space.n_species();
    std::vector<std::size_t> sizes(K);
    for (int k = 0; k < K; ++k)
        sizes[k] = (k == kappa) ? space.species[k].ext_size() : space.species[k].size();
    L.strides.assign(K, 1);
    for (int k = K - 2; k >= 0; --k) L.strides[k] = L.strides[k + 1] * sizes[k + 1];
    L.len = L.strides[0] * sizes[0];
    return L;
}

// out[ext layout] += table entries mapping admitted kappa-configs to boundary
// configs, applied across the untouched other-species axes.
void apply_into_ext(const std::vector<Trans>& table, const AmpVec& in, AmpVec& out,
                    const ConfigSpace& space, const ExtLayout& L) {
    const int kappa = L.kappa;
    const std::size_t stride = space.strides[kappa];  // equals L.strides[kappa]
    const std::size_t block_in = space.species[kappa].size() * stride;
    const std::size_t block_out = space.species[kappa].ext_size() * stride;
    const std::size_t outer = space.product_size / block_in;
    for (const Trans& t : table)
        for (std::size_t o = 0; o < outer; ++o)
            out.segment(o * block_out + t.dst * stride, stride) +=
                t.f * in.segment(o * block_in + t.src * stride, stride);
}

// One-body table of species mu != kappa applied inside the ext layout.
void apply_other_species_ext(int mu, const std::vector<Trans>& table, const AmpVec& in,
                             AmpVec& out, const ConfigSpace& space, const ExtLayout& L) {
    const std::size_t Sm = space.species[mu].size();
    const std::size_t stride = L.strides[mu];
    const std::size_t block = Sm * stride;
    const std::size_t outer = L.len / block;
    for (const Trans& t : table)
        for (std::size_t o = 0; o < outer; ++o)
            out.segment(o * block + t.dst * stride, stride) +=
                t.f * in.segment(o * block + t.src * stride, stride);
}

} // namespace

ZetaTensors build_zeta(int kappa, const AmpVec& amps, const ConfigSpace& space) {
    const SpeciesSpace& sp = space.species[kappa];
    const int M = sp.M;
    const int np = sp.spec.m1 * sp.spec.m2;

    ZetaTensors z;
    z.kappa = kappa;
    z.n_pairs = np;
    z.zeta4 = MatrixXcd::Zero(np, np);
    z.zeta6_intra = MatrixXcd::Zero(np, static_cast<std::size_t>(M) * M * M * M);
    for (int g = 0; g < space.n_species(); ++g) {
        if (g == kappa) continue;
        const int Mg = space.species[g].M;
        z.zeta6_inter[g] = MatrixXcd::Zero(np, static_cast<std::size_t>(np) * Mg * Mg);
    }
    if (np == 0 || sp.ext_size() == 0) return z;  // full CI: no gauge freedom left

    const ExtLayout L = make_ext_layout(kappa, space);

    // Columns: boundary-block images of the raising moves b+_{p2} b_{p1}.
    // These serve both as bra vectors (adjoint of b+_{p1} b_{p2}) and as the
    // ket vectors of zeta4, so zeta4 = W^dagger W is Hermitian PSD.
    MatrixXcd W = MatrixXcd::Zero(L.len, np);
    AmpVec buf(L.len);
    for (int p2 = sp.spec.m1; p2 < M; ++p2)
        for (int p1 = 0; p1 < sp.spec.m1; ++p1) {
            buf.setZero();
            apply_into_ext(sp.obt_ext[static_cast<std::size_t>(p2) * M + p1], amps, buf,
                           space, L);
            W.col(raising_pair_index(sp.spec, p2, p1)) = buf;
        }
    z.zeta4 = W.adjoint() * W;

    // Two-body chains that reach the boundary block.
    for (int i = 0; i < M; ++i)
        for (int k = 0; k < M; ++k)
            for (int l = 0; l < M; ++l)
                for (int j = 0; j < M; ++j) {
                    const std::size_t key =
                        ((static_cast<std::size_t>(i) * M + k) * M + l) * M + j;
                    if (sp.tbt_ext[key].empty()) continue;
                    buf.setZero();
                    apply_into_ext(sp.tbt_ext[key], amps, buf, space, L);
                    z.zeta6_intra.col(key) = W.adjoint() * buf;
                }

    // Raising move on kappa combined with a one-body move on another species.
    for (int g = 0; g < space.n_species(); ++g) {
        if (g == kappa) continue;
        const SpeciesSpace& spg = space.species[g];
        const int Mg = spg.M;
        MatrixXcd& zi = z.zeta6_inter[g];
        AmpVec vbuf(L.len);
        for (int p = 0; p < np; ++p)
            for (int jg = 0; jg < Mg; ++jg)
                for (int lg = 0; lg < Mg; ++lg) {
                    const auto& tbl = spg.obt[static_cast<std::size_t>(jg) * Mg + lg];
                    if (tbl.empty()) continue;
                    vbuf.setZero();
                    apply_other_species_ext(g, tbl, W.col(p), vbuf, space, L);
                    zi.col(static_cast<std::size_t>(p) * Mg * Mg + jg * Mg + lg) =
                        W.adjoint() * vbuf;
                }
    }
    return z;
}

ATensor build_a_tensor(int kappa, const MatrixXcd& rho1, const RasSpec& spec) {
    ATensor a;
    a.kappa = kappa;
    a.n_pairs = spec.m1 * spec.m2;
    a.mat = MatrixXcd::Zero(a.n_pairs, a.n_pairs);
    const int M = spec.total_orbitals();
    for (int j2 = spec.m1; j2 < M; ++j2)
        for (int i1 = 0; i1 < spec.m1; ++i1) {
            const int q = raising_pair_index(spec, j2, i1);
            for (int k2 = spec.m1; k2 < M; ++k2)
                for (int l1 = 0; l1 < spec.m1; ++l1) {
                    const int p = raising_pair_index(spec, k2, l1);
                    cxd val(0, 0);
                    if (j2 == k2) val += rho1(i1, l1);
                    if (l1 == i1) val -= rho1(k2, j2);
                    a.mat(q, p) = val;
                }
        }
    return a;
}

} // namespace rasmix
