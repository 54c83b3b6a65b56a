#pragma once

#include "rasmix/types.hpp"

namespace rasmix {

// Sine (particle-in-a-box) DVR on n equidistant points strictly inside
// (xmin, xmax).  Quadrature weights are absorbed into the function values, so
// inner products are plain sums and multiplicative potentials are diagonal.
struct DvrGrid {
    int n = 0;
    double xmin = 0.0;
    double xmax = 0.0;
    double dx = 0.0;
    VectorXd points;   // x_k = xmin + k*dx, k = 1..n
    MatrixXd kinetic;  // -(1/2) d^2/dx^2 at unit mass; callers divide by mass
};

DvrGrid build_sine_dvr(int n, double xmin, double xmax);

// <f|g> = sum_k conj(f_k) g_k  (unit DVR weights).
cxd quadrature_inner(const VectorXcd& f, const VectorXcd& g);

} // namespace rasmix
