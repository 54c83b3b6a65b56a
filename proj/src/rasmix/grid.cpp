#include "rasmix/grid.hpp"

#include <cmath>

namespace rasmix {

DvrGrid build_sine_dvr(int n, double xmin, double xmax) {
    if (n < 2) throw InvalidConfigError("grid.n must be at least 2");
    if (!(xmax > xmin)) throw InvalidConfigError("grid box must have positive length (xmax > xmin)");

    DvrGrid g;
    g.n = n;
    g.xmin = xmin;
    g.xmax = xmax;
    const double L = xmax - xmin;
    g.dx = L / (n + 1);
    g.points.resize(n);
    for (int k = 0; k < n; ++k) g.points[k] = xmin + (k + 1) * g.dx;

    // The box eigenfunctions sin(k pi (x-xmin)/L) collocate onto the grid via
    // the symmetric orthogonal sine transform U_{kj} = sqrt(2/(n+1)) sin(pi k j/(n+1)).
    // Assembling T = U diag((k pi/L)^2 / 2) U keeps the kinetic spectrum exact
    // to rounding, which is the defining property of the sine DVR.
    const double pi = std::acos(-1.0);
    const double nrm = std::sqrt(2.0 / (n + 1));
    MatrixXd U(n, n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            U(k, j) = nrm * std::sin(pi * (k + 1) * (j + 1) / (n + 1));
    VectorXd ev(n);
    for (int k = 0; k < n; ++k) {
        const double kk = pi * (k + 1) / L;
        ev[k] = 0.5 * kk * kk;
    }
    g.kinetic.noalias() = U * ev.asDiagonal() * U;  // U is symmetric
    g.kinetic = 0.5 * (g.kinetic + g.kinetic.transpose()).eval();
    return g;
}

cxd quadrature_inner(const VectorXcd& f, const VectorXcd& g) {
    if (f.size() != g.size())
        throw std::invalid_argument("quadrature_inner: length mismatch between f and g");
    return f.dot(g);  // Eigen's dot conjugates the left factor
}

} // namespace rasmix
