// Python face of the solver: closed-form reference energies, configuration
// counting, config parsing, and ground-state relaxation driven by the same
// flat key-value config text the CLI reads.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <vector>

#include "rasmix/config.hpp"
#include "rasmix/fockspace.hpp"
#include "rasmix/grid.hpp"
#include "rasmix/model.hpp"
#include "rasmix/propagator.hpp"

namespace py = pybind11;
using namespace rasmix;

namespace {

RasSpec make_spec(int m1, int m2, int nmax, const std::string& scheme) {
    RasSpec s;
    s.m1 = m1;
    s.m2 = m2;
    s.nmax = nmax;
    if (scheme == "general")
        s.scheme = RasScheme::General;
    else if (scheme == "even")
        s.scheme = RasScheme::EvenOnly;
    else
        throw InvalidConfigError("scheme must be 'general' or 'even', got '" + scheme + "'");
    return s;
}

// Environment overrides are deliberately not applied: the python API is a
// pure function of its inputs.
RunConfig parse(const std::string& text) { return parse_config(text, /*apply_env=*/false); }

py::dict describe(const RunConfig& cfg) {
    py::dict d;
    d["grid_n"] = cfg.grid_n;
    d["grid_xmin"] = cfg.grid_xmin;
    d["grid_xmax"] = cfg.grid_xmax;
    d["omega"] = cfg.model.omega;
    d["mode"] = cfg.prop.mode == PropMode::Imag ? "imag" : "real";
    d["dt"] = cfg.prop.dt;
    d["max_steps"] = cfg.prop.max_steps;
    d["energy_tol"] = cfg.prop.energy_tol;
    py::list species;
    for (const SpeciesParams& sp : cfg.model.species) {
        py::dict s;
        s["count"] = sp.count;
        s["mass"] = sp.mass;
        s["lambda"] = sp.lambda;
        s["m1"] = sp.ras.m1;
        s["m2"] = sp.ras.m2;
        s["nmax"] = sp.ras.nmax;
        s["scheme"] = sp.ras.scheme == RasScheme::EvenOnly ? "even" : "general";
        species.append(s);
    }
    d["species"] = species;
    py::list inter;
    for (int i = 0; i < cfg.model.n_species(); ++i)
        for (int j = i + 1; j < cfg.model.n_species(); ++j)
            inter.append(py::make_tuple(i, j, cfg.model.lambda_inter(i, j)));
    d["lambda_inter"] = inter;
    std::vector<RasSpec> specs;
    std::vector<int> counts;
    for (const SpeciesParams& sp : cfg.model.species) {
        specs.push_back(sp.ras);
        counts.push_back(sp.count);
    }
    d["config_count"] = product_config_count(specs, counts);
    return d;
}

py::dict run_config(const std::string& text, PropMode mode) {
    RunConfig cfg = parse(text);
    cfg.prop.mode = mode;
    const DvrGrid grid = build_sine_dvr(cfg.grid_n, cfg.grid_xmin, cfg.grid_xmax);
    const HamiltonianTerms terms = build_him_terms(cfg.model, grid);
    std::vector<SpeciesSpace> spaces;
    for (const SpeciesParams& sp : cfg.model.species)
        spaces.push_back(make_species_space(sp.ras, sp.count));
    auto space = std::make_shared<const ConfigSpace>(product_space(std::move(spaces)));

    const WaveFunction start = cfg.init_checkpoint.empty()
                                   ? initial_guess(terms, space)
                                   : load_checkpoint(cfg.init_checkpoint, space);
    if (start.orbitals.at(0).rows() != grid.n)
        throw InvalidConfigError("checkpoint grid size does not match grid.n");
    const PropResult res = mode == PropMode::Imag ? relax(start, terms, cfg.prop)
                                                  : propagate_real(start, terms, cfg.prop);
    py::dict d;
    d["energy"] = res.final_energy;
    d["steps"] = res.steps;
    d["converged"] = res.converged;
    py::list trace;
    for (const TraceRecord& r : res.trace)
        trace.append(py::make_tuple(r.step, r.time, r.energy, r.norm, r.ortho_dev));
    d["trace"] = trace;
    if (cfg.model.n_species() == 2) {
        try {
            d["exact_energy"] = exact_him_energy(cfg.model);
        } catch (const InvalidConfigError&) {
            // unbound parameter regime: no finite reference energy
        }
    }
    return d;
}

} // namespace

PYBIND11_MODULE(_rasmix, m) {
    m.doc() = "multispecies restricted-active-space solver for trapped boson mixtures";

    py::register_exception<InvalidConfigError>(m, "InvalidConfigError", PyExc_ValueError);

    m.def(
        "exact_ground_energy",
        [](int n1, int n2, double lambda1, double lambda2, double lambda12, double omega,
           double mass1, double mass2) {
            ModelParams mp;
            mp.omega = omega;
            mp.species.resize(2);
            mp.species[0].count = n1;
            mp.species[0].mass = mass1;
            mp.species[0].lambda = lambda1;
            mp.species[1].count = n2;
            mp.species[1].mass = mass2;
            mp.species[1].lambda = lambda2;
            mp.lambda_inter = MatrixXd::Zero(2, 2);
            mp.lambda_inter(0, 1) = mp.lambda_inter(1, 0) = lambda12;
            return exact_him_energy(mp);
        },
        py::arg("n1"), py::arg("n2"), py::arg("lambda1"), py::arg("lambda2"),
        py::arg("lambda12"), py::arg("omega") = 1.0, py::arg("mass1") = 1.0,
        py::arg("mass2") = 1.0,
        "Closed-form ground-state energy of the two-species harmonic mixture");

    m.def(
        "species_configs",
        [](int count, int m1, int m2, int nmax, const std::string& scheme) {
            return species_config_count(make_spec(m1, m2, nmax, scheme), count);
        },
        py::arg("count"), py::arg("m1"), py::arg("m2") = 0, py::arg("nmax") = 0,
        py::arg("scheme") = "general",
        "Number of admitted occupation vectors for one species");

    m.def(
        "validate_config", [](const std::string& text) { return describe(parse(text)); },
        py::arg("text"),
        "Parse config text; returns the resolved settings, raises ValueError on bad input");

    m.def(
        "relax", [](const std::string& text) { return run_config(text, PropMode::Imag); },
        py::arg("text"),
        "Imaginary-time relaxation from config text; returns energy, steps, trace");

    m.def(
        "propagate", [](const std::string& text) { return run_config(text, PropMode::Real); },
        py::arg("text"),
        "Real-time propagation from config text (honors init.checkpoint); returns the "
        "energy/norm trace");
}
