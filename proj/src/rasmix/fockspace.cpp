#include "rasmix/fockspace.hpp"

#include <algorithm>
#include <cmath>

namespace rasmix {

namespace {

void check_spec(const RasSpec& s, int n_particles) {
    if (s.m1 < 1) throw InvalidConfigError("ras.m1 must be at least 1");
    if (s.m2 < 0) throw InvalidConfigError("ras.m2 must be non-negative");
    if (s.nmax < 0) throw InvalidConfigError("ras.nmax must be non-negative");
    if (n_particles < 1) throw InvalidConfigError("species particle count must be at least 1");
}

// Compositions of n into m parts, descending lexicographic order.
void compositions_desc(int n, int m, Occupation& prefix, std::vector<Occupation>& out) {
    if (m == 1) {
        prefix.push_back(n);
        out.push_back(prefix);
        prefix.pop_back();
        return;
    }
    for (int first = n; first >= 0; --first) {
        prefix.push_back(first);
        compositions_desc(n - first, m - 1, prefix, out);
        prefix.pop_back();
    }
}

std::vector<Occupation> compositions(int n, int m) {
    std::vector<Occupation> out;
    if (m == 0) {
        if (n == 0) out.push_back({});
        return out;
    }
    Occupation prefix;
    compositions_desc(n, m, prefix, out);
    return out;
}

std::uint64_t binomial_u64(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    unsigned __int128 acc = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        acc = acc * (n - k + i);
        acc /= i;  // exact: product of i consecutive integers is divisible by i!
        if (acc > static_cast<unsigned __int128>(UINT64_MAX))
            throw InvalidConfigError("configuration count overflows 64 bits");
    }
    return static_cast<std::uint64_t>(acc);
}

// Block of configurations with P2 total exactly k, descending lexicographic.
std::vector<Occupation> block_configs(const RasSpec& s, int n_particles, int k) {
    std::vector<Occupation> out;
    const auto p1 = compositions(n_particles - k, s.m1);
    const auto p2 = compositions(k, s.m2);
    for (const auto& a : p1)
        for (const auto& b : p2) {
            Occupation c = a;
            c.insert(c.end(), b.begin(), b.end());
            out.push_back(std::move(c));
        }
    return out;
}

} // namespace

std::vector<int> admitted_p2_totals(const RasSpec& spec, int n_particles) {
    std::vector<int> ks;
    if (spec.m2 == 0) {
        ks.push_back(0);
        return ks;
    }
    const int top = std::min(spec.nmax, n_particles);
    const int step = (spec.scheme == RasScheme::EvenOnly) ? 2 : 1;
    for (int k = 0; k <= top; k += step) ks.push_back(k);
    return ks;
}

std::vector<Occupation> enumerate_species_configs(const RasSpec& spec, int n_particles) {
    check_spec(spec, n_particles);
    std::vector<Occupation> out;
    for (int k : admitted_p2_totals(spec, n_particles)) {
        auto blk = block_configs(spec, n_particles, k);
        out.insert(out.end(), blk.begin(), blk.end());
    }
    return out;
}

SpeciesSpace make_species_space(const RasSpec& spec, int n_particles) {
    SpeciesSpace sp;
    sp.spec = spec;
    sp.n_particles = n_particles;
    sp.M = spec.total_orbitals();
    sp.configs = enumerate_species_configs(spec, n_particles);
    sp.index.reserve(sp.configs.size() * 2);
    for (int i = 0; i < sp.size(); ++i) sp.index.emplace(sp.configs[i], i);

    // Boundary block: only meaningful for a General-scheme space that is
    // actually truncated (raising moves can overflow the P2 budget).
    const bool truncated = spec.m2 > 0 && spec.nmax < n_particles &&
                           spec.scheme == RasScheme::General;
    if (truncated) {
        sp.ext_configs = block_configs(spec, n_particles, spec.nmax + 1);
        sp.ext_index.reserve(sp.ext_configs.size() * 2);
        for (int i = 0; i < sp.ext_size(); ++i) sp.ext_index.emplace(sp.ext_configs[i], i);
    }

    const int M = sp.M;
    sp.obt.assign(static_cast<std::size_t>(M) * M, {});
    sp.obt_ext.assign(static_cast<std::size_t>(M) * M, {});
    sp.tbt.assign(static_cast<std::size_t>(M) * M * M * M, {});
    sp.tbt_ext.assign(static_cast<std::size_t>(M) * M * M * M, {});

    Occupation o;
    for (int s = 0; s < sp.size(); ++s) {
        // b+_i b_j |o>
        for (int j = 0; j < M; ++j) {
            if (sp.configs[s][j] == 0) continue;
            for (int i = 0; i < M; ++i) {
                o = sp.configs[s];
                const double fj = std::sqrt(static_cast<double>(o[j]));
                o[j] -= 1;
                const double fi = std::sqrt(static_cast<double>(o[i] + 1));
                o[i] += 1;
                const double f = fi * fj;
                if (auto it = sp.index.find(o); it != sp.index.end())
                    sp.obt[i * M + j].push_back({s, it->second, f});
                else if (auto et = sp.ext_index.find(o); et != sp.ext_index.end())
                    sp.obt_ext[i * M + j].push_back({s, et->second, f});
            }
        }
        // b+_i b+_k b_l b_j |o>
        for (int j = 0; j < M; ++j) {
            if (sp.configs[s][j] == 0) continue;
            Occupation o1 = sp.configs[s];
            const double f1 = std::sqrt(static_cast<double>(o1[j]));
            o1[j] -= 1;
            for (int l = 0; l < M; ++l) {
                if (o1[l] == 0) continue;
                Occupation o2 = o1;
                const double f2 = std::sqrt(static_cast<double>(o2[l]));
                o2[l] -= 1;
                for (int k = 0; k < M; ++k) {
                    Occupation o3 = o2;
                    const double f3 = std::sqrt(static_cast<double>(o3[k] + 1));
                    o3[k] += 1;
                    for (int i = 0; i < M; ++i) {
                        o = o3;
                        const double f4 = std::sqrt(static_cast<double>(o[i] + 1));
                        o[i] += 1;
                        const double f = f1 * f2 * f3 * f4;
                        const std::size_t key =
                            ((static_cast<std::size_t>(i) * M + k) * M + l) * M + j;
                        if (auto it = sp.index.find(o); it != sp.index.end())
                            sp.tbt[key].push_back({s, it->second, f});
                        else if (auto et = sp.ext_index.find(o); et != sp.ext_index.end())
                            sp.tbt_ext[key].push_back({s, et->second, f});
                    }
                }
            }
        }
    }
    return sp;
}

std::size_t ConfigSpace::flat_index(const std::vector<int>& per_species) const {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < species.size(); ++k)
        idx += static_cast<std::size_t>(per_species[k]) * strides[k];
    return idx;
}

std::vector<int> ConfigSpace::unflatten(std::size_t flat) const {
    std::vector<int> out(species.size());
    for (std::size_t k = 0; k < species.size(); ++k) {
        out[k] = static_cast<int>(flat / strides[k]);
        flat %= strides[k];
    }
    return out;
}

ConfigSpace product_space(std::vector<SpeciesSpace> lists) {
    if (lists.empty()) throw InvalidConfigError("product space needs at least one species");
    ConfigSpace cs;
    cs.species = std::move(lists);
    const int K = cs.n_species();
    cs.strides.assign(K, 1);
    for (int k = K - 2; k >= 0; --k)
        cs.strides[k] = cs.strides[k + 1] * cs.species[k + 1].size();
    cs.product_size = cs.strides[0] * cs.species[0].size();
    return cs;
}

std::uint64_t species_config_count(const RasSpec& spec, int n_particles) {
    check_spec(spec, n_particles);
    std::uint64_t total = 0;
    for (int k : admitted_p2_totals(spec, n_particles)) {
        const std::uint64_t p2 =
            (spec.m2 == 0) ? 1 : binomial_u64(k + spec.m2 - 1, spec.m2 - 1);
        const std::uint64_t p1 = binomial_u64(n_particles - k + spec.m1 - 1, spec.m1 - 1);
        std::uint64_t term;
        if (__builtin_mul_overflow(p1, p2, &term) || __builtin_add_overflow(total, term, &total))
            throw InvalidConfigError("configuration count overflows 64 bits");
    }
    return total;
}

std::uint64_t product_config_count(const std::vector<RasSpec>& specs,
                                   const std::vector<int>& counts) {
    if (specs.size() != counts.size())
        throw InvalidConfigError("species spec/count lists differ in length");
    std::uint64_t total = 1;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        const std::uint64_t c = species_config_count(specs[k], counts[k]);
        if (__builtin_mul_overflow(total, c, &total))
            throw InvalidConfigError("configuration count overflows 64 bits");
    }
    return total;
}

namespace {

void check_species_index(int kappa, const ConfigSpace& space) {
    if (kappa < 0 || kappa >= space.n_species())
        throw InvalidConfigError("species index out of range");
}

void check_orbital(int i, const SpeciesSpace& sp) {
    if (i < 0 || i >= sp.M) throw InvalidConfigError("orbital index out of range");
}

} // namespace

void apply_species_table(int kappa, const std::vector<Trans>& table, const AmpVec& in,
                         AmpVec& out, const ConfigSpace& space) {
    const std::size_t Sk = space.species[kappa].size();
    const std::size_t stride = space.strides[kappa];
    const std::size_t block = Sk * stride;
    const std::size_t outer = space.product_size / block;
    for (const Trans& t : table) {
        for (std::size_t o = 0; o < outer; ++o) {
            const std::size_t base = o * block;
            out.segment(base + t.dst * stride, stride) +=
                t.f * in.segment(base + t.src * stride, stride);
        }
    }
}

void apply_species_dense(int kappa, const MatrixXcd& T, const AmpVec& in, AmpVec& out,
                         const ConfigSpace& space) {
    using RowMat = Eigen::Matrix<cxd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const std::size_t Sk = space.species[kappa].size();
    const std::size_t stride = space.strides[kappa];
    const std::size_t block = Sk * stride;
    const std::size_t outer = space.product_size / block;
    if (stride == 1) {
        // Last species: contiguous rows, one big product.
        Eigen::Map<const RowMat> X(in.data(), outer, Sk);
        Eigen::Map<RowMat> O(out.data(), outer, Sk);
        O.noalias() += X * T.transpose();
        return;
    }
    for (std::size_t o = 0; o < outer; ++o) {
        Eigen::Map<const RowMat> X(in.data() + o * block, Sk, stride);
        Eigen::Map<RowMat> O(out.data() + o * block, Sk, stride);
        O.noalias() += T * X;
    }
}

AmpVec apply_one_body(int kappa, int i, int j, const AmpVec& amps, const ConfigSpace& space) {
    check_species_index(kappa, space);
    const SpeciesSpace& sp = space.species[kappa];
    check_orbital(i, sp);
    check_orbital(j, sp);
    if (static_cast<std::size_t>(amps.size()) != space.product_size)
        throw InvalidConfigError("amplitude vector length does not match space");
    AmpVec out = AmpVec::Zero(amps.size());
    apply_species_table(kappa, sp.obt[static_cast<std::size_t>(i) * sp.M + j], amps, out, space);
    return out;
}

AmpVec apply_two_body(int kappa, int i, int k, int l, int j, const AmpVec& amps,
                      const ConfigSpace& space) {
    check_species_index(kappa, space);
    const SpeciesSpace& sp = space.species[kappa];
    check_orbital(i, sp);
    check_orbital(k, sp);
    check_orbital(l, sp);
    check_orbital(j, sp);
    if (static_cast<std::size_t>(amps.size()) != space.product_size)
        throw InvalidConfigError("amplitude vector length does not match space");
    AmpVec out = AmpVec::Zero(amps.size());
    const std::size_t key =
        ((static_cast<std::size_t>(i) * sp.M + k) * sp.M + l) * sp.M + j;
    apply_species_table(kappa, sp.tbt[key], amps, out, space);
    return out;
}

AmpVec apply_inter_pair(int kappa, int gamma, int i_k, int j_k, int i_g, int j_g,
                        const AmpVec& amps, const ConfigSpace& space) {
    check_species_index(kappa, space);
    check_species_index(gamma, space);
    if (kappa == gamma)
        throw InvalidConfigError("apply_inter_pair needs two distinct species");
    AmpVec tmp = apply_one_body(kappa, i_k, j_k, amps, space);
    return apply_one_body(gamma, i_g, j_g, tmp, space);
}

} // namespace rasmix
