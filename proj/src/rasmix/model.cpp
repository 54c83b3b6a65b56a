#include "rasmix/model.hpp"

#include <cmath>

namespace rasmix {

namespace {

void check_model(const ModelParams& model) {
    if (model.species.empty()) throw InvalidConfigError("model needs at least one species");
    if (model.omega <= 0) throw InvalidConfigError("model.omega must be positive");
    const int K = model.n_species();
    if (model.lambda_inter.rows() != K || model.lambda_inter.cols() != K)
        throw InvalidConfigError("lambda_inter must be K x K");
    for (const auto& s : model.species) {
        if (s.count < 1) throw InvalidConfigError("species count must be at least 1");
        if (s.mass <= 0) throw InvalidConfigError("species mass must be positive");
    }
}

} // namespace

HamiltonianTerms build_him_terms(const ModelParams& model, const DvrGrid& grid) {
    check_model(model);
    HamiltonianTerms t;
    t.grid = grid;
    const int K = model.n_species();
    const int n = grid.n;
    t.lambda_inter = model.lambda_inter;

    MatrixXd sqdiff(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const double d = grid.points[a] - grid.points[b];
            sqdiff(a, b) = d * d;
        }

    for (int k = 0; k < K; ++k) {
        const auto& s = model.species[k];
        MatrixXd h = grid.kinetic / s.mass;
        for (int a = 0; a < n; ++a)
            h(a, a) += 0.5 * s.mass * model.omega * model.omega * grid.points[a] *
                       grid.points[a];
        t.h.push_back(std::move(h));
        t.v.push_back(s.lambda * sqdiff);
        t.lambda_intra.push_back(s.lambda);
    }
    for (int k = 0; k < K; ++k)
        for (int g = k + 1; g < K; ++g)
            t.w[{k, g}] = model.lambda_inter(k, g) * sqdiff;
    return t;
}

double exact_him_energy(const ModelParams& model) {
    check_model(model);
    if (model.n_species() != 2)
        throw InvalidConfigError("exact_him_energy is defined for exactly two species");
    const double w = model.omega;
    const double N1 = model.species[0].count, N2 = model.species[1].count;
    const double m1 = model.species[0].mass, m2 = model.species[1].mass;
    const double l1 = model.species[0].lambda, l2 = model.species[1].lambda;
    const double l12 = model.lambda_inter(0, 1);

    // Normal-mode frequencies of the fully harmonic system: (N1 - 1) + (N2 - 1)
    // intra-species relative modes, one inter-species relative mode, and the
    // centre of mass at the bare trap frequency.
    const double r1 = w * w + 2.0 * (l1 * N1 + l12 * N2) / m1;
    const double r2 = w * w + 2.0 * (l2 * N2 + l12 * N1) / m2;
    const double r12 = w * w + 2.0 * l12 * (N1 / m2 + N2 / m1);
    if (r1 < 0 || r2 < 0 || r12 < 0)
        throw InvalidConfigError("unbound harmonic mixture: negative squared mode frequency");
    return 0.5 * ((N1 - 1) * std::sqrt(r1) + (N2 - 1) * std::sqrt(r2) + std::sqrt(r12) + w);
}

namespace {

// Quadratic pair potential lambda (x - x')^2 factorizes over the two
// coordinates, so its matrix elements need only the one-body moments
//   S_pq = <p|q>, X_pq = <p|x|q>, X2_pq = <p|x^2|q>.
struct Moments {
    MatrixXcd S, X, X2;
};

Moments one_body_moments(const MatrixXcd& phi, const VectorXd& x) {
    Moments m;
    m.S = phi.adjoint() * phi;
    m.X = phi.adjoint() * (x.asDiagonal() * phi);
    m.X2 = phi.adjoint() * (x.array().square().matrix().asDiagonal() * phi);
    return m;
}

MatrixXcd separable_pair_elements(double lambda, const Moments& a, const Moments& b) {
    const int Ma = static_cast<int>(a.S.rows());
    const int Mb = static_cast<int>(b.S.rows());
    MatrixXcd out(Ma * Ma, Mb * Mb);
    for (int i = 0; i < Ma; ++i)
        for (int j = 0; j < Ma; ++j)
            for (int k = 0; k < Mb; ++k)
                for (int l = 0; l < Mb; ++l)
                    out(i * Ma + j, k * Mb + l) =
                        lambda * (a.X2(i, j) * b.S(k, l) + a.S(i, j) * b.X2(k, l) -
                                  2.0 * a.X(i, j) * b.X(k, l));
    return out;
}

MatrixXcd direct_pair_elements(const MatrixXd& vgrid, const MatrixXcd& phia,
                               const MatrixXcd& phib) {
    const int Ma = static_cast<int>(phia.cols());
    const int Mb = static_cast<int>(phib.cols());
    const int n = static_cast<int>(phia.rows());
    MatrixXcd out(Ma * Ma, Mb * Mb);
    for (int k = 0; k < Mb; ++k)
        for (int l = 0; l < Mb; ++l) {
            VectorXcd dens = phib.col(k).conjugate().cwiseProduct(phib.col(l));
            VectorXcd u = vgrid.cast<cxd>() * dens;  // u(x) = int v(x,x') rho_kl(x') dx'
            for (int i = 0; i < Ma; ++i)
                for (int j = 0; j < Ma; ++j) {
                    cxd acc(0, 0);
                    for (int a = 0; a < n; ++a)
                        acc += std::conj(phia(a, i)) * phia(a, j) * u[a];
                    out(i * Ma + j, k * Mb + l) = acc;
                }
        }
    return out;
}

} // namespace

OrbitalMatrixElements build_matrix_elements(const WaveFunction& wf,
                                            const HamiltonianTerms& terms,
                                            bool force_direct) {
    OrbitalMatrixElements m;
    const int K = wf.n_species();
    std::vector<Moments> mom(K);
    for (int k = 0; k < K; ++k) {
        const MatrixXcd& phi = wf.orbitals[k];
        m.h.push_back(phi.adjoint() * (terms.h[k] * phi));
        mom[k] = one_body_moments(phi, terms.grid.points);
        if (force_direct)
            m.v.push_back(direct_pair_elements(terms.v[k], phi, phi));
        else
            m.v.push_back(separable_pair_elements(terms.lambda_intra[k], mom[k], mom[k]));
    }
    for (const auto& [pair, wgrid] : terms.w) {
        const auto [k, g] = pair;
        if (force_direct)
            m.w[pair] = direct_pair_elements(wgrid, wf.orbitals[k], wf.orbitals[g]);
        else
            m.w[pair] = separable_pair_elements(terms.lambda_inter(k, g), mom[k], mom[g]);
    }
    return m;
}

MatrixXcd inter_w_block(const OrbitalMatrixElements& m, int kappa, int gamma) {
    if (kappa < gamma) return m.w.at({kappa, gamma});
    return m.w.at({gamma, kappa}).transpose();
}

double energy_from_elements(const OrbitalMatrixElements& m, const Densities& dens,
                            double* imag_residue) {
    cxd e(0, 0);
    const int K = static_cast<int>(m.h.size());
    for (int k = 0; k < K; ++k) {
        e += m.h[k].cwiseProduct(dens.rho1[k]).sum();
        e += 0.5 * m.v[k].cwiseProduct(dens.rho2[k]).sum();
    }
    for (const auto& [pair, wblk] : m.w)
        e += wblk.cwiseProduct(dens.rho_inter.at(pair)).sum();
    if (imag_residue) *imag_residue = e.imag();
    return e.real();
}

double energy_expectation(const WaveFunction& wf, const HamiltonianTerms& terms,
                          const Densities& dens, double* imag_residue) {
    return energy_from_elements(build_matrix_elements(wf, terms), dens, imag_residue);
}

} // namespace rasmix
