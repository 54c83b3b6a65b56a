#include <numeric>

#include "doctest.h"
#include "oracles.hpp"

using namespace rasmix;

namespace {

RasSpec spec_of(int m1, int m2, int nmax, RasScheme s = RasScheme::General) {
    RasSpec r;
    r.m1 = m1;
    r.m2 = m2;
    r.nmax = nmax;
    r.scheme = s;
    return r;
}

} // namespace

TEST_CASE("enumeration matches the reference ordering") {
    const std::vector<std::pair<RasSpec, int>> cases = {
        {spec_of(1, 0, 0), 5},
        {spec_of(3, 0, 0), 4},
        {spec_of(1, 2, 3), 6},
        {spec_of(2, 2, 4), 7},
        {spec_of(1, 3, 8), 5},          // nmax > N: full CI reached
        {spec_of(1, 2, 4, RasScheme::EvenOnly), 6},
        {spec_of(2, 1, 6, RasScheme::EvenOnly), 7},
    };
    for (const auto& [spec, n] : cases) {
        const SpeciesSpace sp = make_species_space(spec, n);
        const auto ref = oracle::admitted_configs_reference(spec, n);
        REQUIRE(sp.configs.size() == ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) CHECK(sp.configs[i] == ref[i]);
        // condensed configuration first
        Occupation condensed(spec.total_orbitals(), 0);
        condensed[0] = n;
        CHECK(sp.configs[0] == condensed);
        CHECK(species_config_count(spec, n) == sp.configs.size());
        for (const Occupation& occ : sp.configs)
            CHECK(std::accumulate(occ.begin(), occ.end(), 0) == n);
    }
}

TEST_CASE("even scheme admits only even restricted totals") {
    const RasSpec spec = spec_of(1, 2, 6, RasScheme::EvenOnly);
    const SpeciesSpace sp = make_species_space(spec, 7);
    for (const Occupation& occ : sp.configs) {
        int p2 = 0;
        for (int i = spec.m1; i < spec.total_orbitals(); ++i) p2 += occ[i];
        CHECK(p2 % 2 == 0);
        CHECK(p2 <= 6);
    }
}

TEST_CASE("boundary block holds exactly the one-excitation-too-many totals") {
    const RasSpec trunc = spec_of(1, 2, 3);
    const SpeciesSpace sp = make_species_space(trunc, 6);
    REQUIRE(sp.ext_size() > 0);
    for (const Occupation& occ : sp.ext_configs) {
        int p2 = 0;
        for (int i = trunc.m1; i < trunc.total_orbitals(); ++i) p2 += occ[i];
        CHECK(p2 == trunc.nmax + 1);
    }
    // full CI and even scheme carry no boundary block
    CHECK(make_species_space(spec_of(1, 2, 6), 6).ext_size() == 0);
    CHECK(make_species_space(spec_of(2, 0, 0), 6).ext_size() == 0);
    CHECK(make_species_space(spec_of(1, 2, 2, RasScheme::EvenOnly), 6).ext_size() == 0);
}

TEST_CASE("closed-form counts against explicit enumeration") {
    for (int m1 = 1; m1 <= 2; ++m1)
        for (int m2 = 0; m2 <= 3; ++m2)
            for (int nmax = 0; nmax <= 6; nmax += 2)
                for (int n : {1, 3, 6}) {
                    if (m2 == 0 && nmax != 0) continue;
                    for (RasScheme s : {RasScheme::General, RasScheme::EvenOnly}) {
                        const RasSpec spec = spec_of(m1, m2, nmax, s);
                        CHECK(species_config_count(spec, n) ==
                              oracle::admitted_configs_reference(spec, n).size());
                    }
                }
}

TEST_CASE("published configuration-space sizes") {
    auto fci = [](int m) { return spec_of(m, 0, 0); };
    // two-species counts quoted for the 100 + 4 mixture
    CHECK(product_config_count({spec_of(1, 1, 3), fci(3)}, {100, 4}) == 60);
    CHECK(product_config_count({spec_of(1, 1, 2), fci(2)}, {100, 4}) == 15);
    CHECK(product_config_count({spec_of(1, 2, 3), fci(3)}, {100, 4}) == 150);
    CHECK(product_config_count({spec_of(1, 2, 5), fci(4)}, {100, 4}) == 735);
    CHECK(product_config_count({spec_of(1, 2, 8), fci(5)}, {100, 4}) == 3150);
    CHECK(product_config_count({spec_of(1, 3, 9), fci(5)}, {100, 4}) == 15400);
    CHECK(species_config_count(fci(5), 100) == 4598126ull);
    CHECK(product_config_count({fci(4), fci(5)}, {100, 4}) == 12379570ull);
    CHECK(product_config_count({fci(5), fci(6)}, {100, 4}) == 579363876ull);
}

TEST_CASE("count overflow is detected, not wrapped") {
    CHECK_THROWS_AS((void)species_config_count(spec_of(64, 0, 0), 1000000000),
                    InvalidConfigError);
}

TEST_CASE("flat index round trip") {
    ConfigSpace space = product_space(
        {make_species_space(spec_of(1, 1, 2), 3), make_species_space(spec_of(2, 0, 0), 2)});
    REQUIRE(space.product_size ==
            make_species_space(spec_of(1, 1, 2), 3).configs.size() * 3u);
    for (std::size_t f = 0; f < space.product_size; ++f) {
        const std::vector<int> idx = space.unflatten(f);
        CHECK(space.flat_index(idx) == f);
    }
    CHECK(space.strides.back() == 1u);
}

TEST_CASE("transfer application agrees with dense occupancy arithmetic") {
    const ConfigSpace space = product_space(
        {make_species_space(spec_of(1, 2, 2), 3), make_species_space(spec_of(2, 0, 0), 2)});
    std::vector<int> sizes{space.species[0].size(), space.species[1].size()};
    const AmpVec x = oracle::random_amps(space.product_size, 11);

    for (int kappa = 0; kappa < 2; ++kappa) {
        const int M = space.species[kappa].M;
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j) {
                const AmpVec lib = apply_one_body(kappa, i, j, x, space);
                const MatrixXcd dense = oracle::embed(
                    sizes, kappa, oracle::dense_transfer(space.species[kappa].configs, i, j));
                CHECK((lib - dense * x).norm() < 1e-12);
            }
        for (int i = 0; i < M; ++i)
            for (int k = 0; k < M; ++k)
                for (int l = 0; l < M; ++l)
                    for (int j = 0; j < M; ++j) {
                        const AmpVec lib = apply_two_body(kappa, i, k, l, j, x, space);
                        const MatrixXcd dense = oracle::embed(
                            sizes, kappa,
                            oracle::dense_two_body(space.species[kappa].configs, i, k, l, j));
                        CHECK((lib - dense * x).norm() < 1e-12);
                    }
    }
}

TEST_CASE("inter-species product operators commute across species") {
    const ConfigSpace space = product_space(
        {make_species_space(spec_of(1, 1, 2), 3), make_species_space(spec_of(2, 0, 0), 2)});
    const AmpVec x = oracle::random_amps(space.product_size, 23);
    const AmpVec ab = apply_one_body(1, 0, 1, apply_one_body(0, 1, 0, x, space), space);
    const AmpVec ba = apply_one_body(0, 1, 0, apply_one_body(1, 0, 1, x, space), space);
    CHECK((ab - ba).norm() < 1e-13);

    const AmpVec pair = apply_inter_pair(0, 1, 1, 0, 0, 1, x, space);
    CHECK((pair - ab).norm() < 1e-13);
    CHECK_THROWS_AS((void)apply_inter_pair(0, 0, 1, 0, 0, 1, x, space), InvalidConfigError);
}

TEST_CASE("adjointness of transfer operators on a full CI space") {
    const ConfigSpace space = product_space({make_species_space(spec_of(3, 0, 0), 3)});
    const AmpVec x = oracle::random_amps(space.product_size, 5);
    const AmpVec y = oracle::random_amps(space.product_size, 6);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const cxd lhs = x.dot(apply_one_body(0, i, j, y, space));
            const cxd rhs = apply_one_body(0, j, i, x, space).dot(y);
            CHECK(std::abs(lhs - rhs) < 1e-13);
        }
}

TEST_CASE("dense and table application paths agree") {
    const ConfigSpace space = product_space(
        {make_species_space(spec_of(1, 2, 3), 4), make_species_space(spec_of(2, 0, 0), 3)});
    const AmpVec x = oracle::random_amps(space.product_size, 31);
    for (int kappa = 0; kappa < 2; ++kappa) {
        const SpeciesSpace& sp = space.species[kappa];
        MatrixXcd t = MatrixXcd::Zero(sp.size(), sp.size());
        std::mt19937 rng(17 + kappa);
        std::normal_distribution<double> g;
        for (int r = 0; r < sp.size(); ++r)
            for (int c = 0; c < sp.size(); ++c) t(r, c) = cxd(g(rng), g(rng));

        AmpVec dense_out = AmpVec::Zero(space.product_size);
        apply_species_dense(kappa, t, x, dense_out, space);

        // reference: contract against explicit per-entry transfers
        AmpVec ref = AmpVec::Zero(space.product_size);
        const std::size_t stride = space.strides[kappa];
        const std::size_t block = sp.size() * stride;
        const std::size_t outer = space.product_size / block;
        for (std::size_t o = 0; o < outer; ++o)
            for (int r = 0; r < sp.size(); ++r)
                for (int c = 0; c < sp.size(); ++c)
                    ref.segment(o * block + r * stride, stride) +=
                        t(r, c) * x.segment(o * block + c * stride, stride);
        CHECK((dense_out - ref).norm() / ref.norm() < 1e-13);
    }
}
