#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>
#include <string>

namespace rasmix {

using cxd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

// Raised for malformed user input (config files, shape mismatches, bad
// parameter ranges).  The CLI maps it to its invalid-config exit code.
struct InvalidConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One row of the propagation diagnostics trace.
struct TraceRecord {
    long step = 0;
    double time = 0.0;  // tau in imaginary time, t in real time
    double energy = 0.0;
    double norm = 0.0;
    double ortho_dev = 0.0;     // max |<phi_p|phi_q> - delta_pq| over species
    double eta_residual = 0.0;  // max gauge linear-system residual over species
};

// Raised when a relaxation's energy rises persistently instead of settling.
// Carries the trace accumulated up to the failure.
struct DivergenceError : std::runtime_error {
    std::vector<TraceRecord> trace;
    DivergenceError(const std::string& msg, std::vector<TraceRecord> t = {})
        : std::runtime_error(msg), trace(std::move(t)) {}
};

// Raised on non-finite values appearing during propagation.
struct NumericalError : std::runtime_error {
    std::vector<TraceRecord> trace;
    NumericalError(const std::string& msg, std::vector<TraceRecord> t = {})
        : std::runtime_error(msg), trace(std::move(t)) {}
};

} // namespace rasmix
