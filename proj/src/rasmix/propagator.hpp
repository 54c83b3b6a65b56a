#pragma once

#include <functional>
#include <string>

#include "rasmix/eom.hpp"

namespace rasmix {

enum class PropMode { Imag, Real };

struct PropSettings {
    PropMode mode = PropMode::Imag;
    double dt = 1e-3;
    long max_steps = 200000;
    // |dE| per step convergence threshold (imag mode).  The first step of a
    // run compares against the full value (it measures the drift rate of the
    // initial state, so a restart from a converged checkpoint stops at once);
    // later steps compare against half of it, parking the state safely inside
    // the criterion rather than on its boundary.
    double energy_tol = 1e-13;
    double ortho_tol = 1e-10;   // orbital Gram deviation triggering re-orthonormalization
    long trace_every = 10;      // trace sampling stride (first and last always kept)
};

// Multistep history: g = dy/dt evaluations, newest last, at most 4 kept.
struct AbmHistory {
    std::vector<VectorXcd> g;
    void push(VectorXcd v) {
        g.push_back(std::move(v));
        if (g.size() > 4) g.erase(g.begin());
    }
    void clear() { g.clear(); }
};

// One fixed-step advance of dy/dt = g(y) where the model supplies F = i dy/dt:
//   real time  g = -i F,  imaginary time  g = -F.
// Runge-Kutta bootstrap until four derivatives are banked, then
// Adams-Bashforth-Moulton predictor-corrector (PECE).  Requires
// hist.g.back() to be g evaluated at the incoming y; leaves the corrector-point
// derivative out of the history (the driver pushes g at the post-processed
// state afterwards).
VectorXcd abm_step(const VectorXcd& y, double dt, PropMode mode,
                   const std::function<VectorXcd(const VectorXcd&)>& iF, AbmHistory& hist);

// Flat state layout: [amps, orbitals species 0 column-major, orbitals 1, ...].
VectorXcd pack_state(const WaveFunction& wf);
void unpack_state(const VectorXcd& y, WaveFunction& wf);

struct PropResult {
    WaveFunction wf;
    std::vector<TraceRecord> trace;
    long steps = 0;
    bool converged = false;  // imag mode: |dE| < energy_tol reached
    double final_energy = 0.0;
};

// Imaginary-time relaxation toward the variational ground state.
PropResult relax(const WaveFunction& initial, const HamiltonianTerms& terms,
                 const PropSettings& settings);

// Real-time propagation for max_steps steps of size dt.
PropResult propagate_real(const WaveFunction& initial, const HamiltonianTerms& terms,
                          const PropSettings& settings);

// Deviation of the stacked orbital Gram matrices from identity (max norm).
double orthonormality_deviation(const WaveFunction& wf);

// Restore orthonormality without mixing the RAS partitions: symmetric
// orthonormalization inside P1, projection of P1 out of P2, symmetric
// orthonormalization inside P2.
void reorthonormalize_blockwise(WaveFunction& wf);

// Lowest-M eigenvectors of each one-body operator (phase-fixed), amplitudes
// concentrated on the first configuration of each species.
WaveFunction initial_guess(const HamiltonianTerms& terms,
                           std::shared_ptr<const ConfigSpace> space);

// Plain-text checkpoints, bitwise reproducible at double precision.  Header
// records schema version, step count, per-species spaces (count m1 m2 nmax
// scheme), and model parameters; then amplitudes and orbital columns as
// %.17g "re im" pairs, column-major per species.  The loader enforces that
// the configuration space matches; model parameters are informational.
struct CheckpointInfo {
    long long steps = 0;
    ModelParams model;
};
void save_checkpoint(const std::string& path, const WaveFunction& wf,
                     const ModelParams& model, long long steps);
WaveFunction load_checkpoint(const std::string& path, std::shared_ptr<const ConfigSpace> space,
                             CheckpointInfo* info = nullptr);

} // namespace rasmix
