#pragma once

#include "rasmix/types.hpp"

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace rasmix {

enum class RasScheme { General, EvenOnly };

// Active-space partition for one species: m1 primary orbitals (P1) plus m2
// secondary orbitals (P2) holding at most nmax particles in total.  General
// admits every P2 total 0..nmax; EvenOnly admits only 0, 2, 4, ... <= nmax.
// m2 = 0 (single partition) is the full-CI / Gross-Pitaevskii-like case.
struct RasSpec {
    int m1 = 1;
    int m2 = 0;
    int nmax = 0;
    RasScheme scheme = RasScheme::General;
    int total_orbitals() const { return m1 + m2; }
};

// Occupation-number vector over the M = m1 + m2 orbitals of one species.
using Occupation = std::vector<int>;

struct OccHash {
    std::size_t operator()(const Occupation& o) const noexcept {
        std::size_t h = 1469598103934665603ull;
        for (int v : o) {
            h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull;
            h *= 1099511628211ull;
        }
        return h;
    }
};

// One amplitude-transfer arc of an operator in the configuration basis:
// contributes f * amp[src] into amp[dst].
struct Trans {
    int src;
    int dst;
    double f;
};

// Configuration basis of a single species, with precomputed ladder tables.
struct SpeciesSpace {
    RasSpec spec;
    int n_particles = 0;
    int M = 0;
    std::vector<Occupation> configs;  // canonical enumeration order
    std::unordered_map<Occupation, int, OccHash> index;

    // Boundary block with P2 total exactly nmax+1 (same canonical order):
    // the image of single raising moves out of the admitted space.  Used by
    // the General-scheme gauge metric; empty when the space is full CI or
    // for the EvenOnly scheme.
    std::vector<Occupation> ext_configs;
    std::unordered_map<Occupation, int, OccHash> ext_index;

    // b+_i b_j tables keyed i*M + j; targets inside the space resp. in the
    // boundary block.
    std::vector<std::vector<Trans>> obt, obt_ext;
    // b+_i b+_k b_l b_j tables keyed ((i*M + k)*M + l)*M + j.
    std::vector<std::vector<Trans>> tbt, tbt_ext;

    int size() const { return static_cast<int>(configs.size()); }
    int ext_size() const { return static_cast<int>(ext_configs.size()); }
};

// Admitted P2 totals for a spec with N particles, ascending.
std::vector<int> admitted_p2_totals(const RasSpec& spec, int n_particles);

// Canonical enumeration: ascending P2-excitation blocks; descending
// lexicographic occupation order within each block.  The fully condensed
// configuration (N, 0, ..., 0) is always first.
std::vector<Occupation> enumerate_species_configs(const RasSpec& spec, int n_particles);

SpeciesSpace make_species_space(const RasSpec& spec, int n_particles);

// Direct product of per-species configuration bases.  Flat indices are
// row-major over species: index = sum_k i_k * stride_k with stride_{K-1} = 1.
struct ConfigSpace {
    std::vector<SpeciesSpace> species;
    std::size_t product_size = 0;
    std::vector<std::size_t> strides;

    int n_species() const { return static_cast<int>(species.size()); }
    std::size_t flat_index(const std::vector<int>& per_species) const;
    std::vector<int> unflatten(std::size_t flat) const;
};

ConfigSpace product_space(std::vector<SpeciesSpace> lists);

// Closed-form configuration counts; no enumeration, overflow-checked.
std::uint64_t species_config_count(const RasSpec& spec, int n_particles);
std::uint64_t product_config_count(const std::vector<RasSpec>& specs,
                                   const std::vector<int>& counts);

using AmpVec = VectorXcd;

// Elementary second-quantized operators on the product space.  Moves whose
// target leaves the admitted space are dropped (projection onto the space).
AmpVec apply_one_body(int kappa, int i, int j, const AmpVec& amps, const ConfigSpace& space);
AmpVec apply_two_body(int kappa, int i, int k, int l, int j, const AmpVec& amps,
                      const ConfigSpace& space);
// (b+_i b_j) on species kappa times (b+_i b_j) on species gamma != kappa.
AmpVec apply_inter_pair(int kappa, int gamma, int i_k, int j_k, int i_g, int j_g,
                        const AmpVec& amps, const ConfigSpace& space);

// amps[dst-slice] += f * amps[src-slice] over one species' transition list.
void apply_species_table(int kappa, const std::vector<Trans>& table, const AmpVec& in,
                         AmpVec& out, const ConfigSpace& space);

// out[κ-slice d] += sum_s T(d,s) in[κ-slice s]: dense one-species operator.
void apply_species_dense(int kappa, const MatrixXcd& T, const AmpVec& in, AmpVec& out,
                         const ConfigSpace& space);

} // namespace rasmix
