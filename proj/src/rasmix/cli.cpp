#include "rasmix/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rasmix/config.hpp"
#include "rasmix/grid.hpp"
#include "rasmix/propagator.hpp"

namespace rasmix {

namespace {

constexpr std::uint64_t kMaxRunConfigs = 50'000'000;  // flat-vector run guard

struct Setup {
    DvrGrid grid;
    HamiltonianTerms terms;
    std::shared_ptr<const ConfigSpace> space;
};

std::vector<RasSpec> ras_specs(const ModelParams& model) {
    std::vector<RasSpec> specs;
    for (const SpeciesParams& sp : model.species) specs.push_back(sp.ras);
    return specs;
}

std::vector<int> species_counts(const ModelParams& model) {
    std::vector<int> counts;
    for (const SpeciesParams& sp : model.species) counts.push_back(sp.count);
    return counts;
}

Setup build_setup(const RunConfig& cfg) {
    Setup s{build_sine_dvr(cfg.grid_n, cfg.grid_xmin, cfg.grid_xmax),
            HamiltonianTerms{}, nullptr};
    s.terms = build_him_terms(cfg.model, s.grid);
    const std::uint64_t total =
        product_config_count(ras_specs(cfg.model), species_counts(cfg.model));
    if (total > kMaxRunConfigs)
        throw InvalidConfigError("configuration space too large to hold in memory (" +
                                 std::to_string(total) + " configurations)");
    std::vector<SpeciesSpace> spaces;
    for (const SpeciesParams& sp : cfg.model.species)
        spaces.push_back(make_species_space(sp.ras, sp.count));
    s.space = std::make_shared<const ConfigSpace>(product_space(std::move(spaces)));
    return s;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    std::fprintf(f, "step,tau_or_t,energy,norm,ortho_dev\n");
    for (const TraceRecord& r : trace)
        std::fprintf(f, "%ld,%.17g,%.17g,%.17g,%.17g\n", r.step, r.time, r.energy, r.norm,
                     r.ortho_dev);
    std::fclose(f);
}

std::string scheme_name(RasScheme s) {
    return s == RasScheme::General ? "general" : "even";
}

void print_counts(std::ostream& os, const RunConfig& cfg) {
    const auto specs = ras_specs(cfg.model);
    const auto counts = species_counts(cfg.model);
    for (std::size_t k = 0; k < specs.size(); ++k)
        os << "species." << k
           << ".configs = " << species_config_count(specs[k], counts[k]) << "\n";
    os << "product.configs = " << product_config_count(specs, counts) << "\n";
}

int cmd_count(const std::string& config_path) {
    const RunConfig cfg = load_config(config_path);
    print_counts(std::cout, cfg);
    return 0;
}

int cmd_validate(const std::string& config_path) {
    const RunConfig cfg = load_config(config_path);
    std::ostream& os = std::cout;
    os << "grid.n = " << cfg.grid_n << "\n";
    os << "grid.xmin = " << cfg.grid_xmin << "\n";
    os << "grid.xmax = " << cfg.grid_xmax << "\n";
    os << "model.nspecies = " << cfg.model.n_species() << "\n";
    os << "model.omega = " << cfg.model.omega << "\n";
    for (int k = 0; k < cfg.model.n_species(); ++k) {
        const SpeciesParams& sp = cfg.model.species[k];
        os << "species." << k << ".count = " << sp.count << "\n";
        os << "species." << k << ".mass = " << sp.mass << "\n";
        os << "species." << k << ".lambda = " << sp.lambda << "\n";
        os << "species." << k << ".ras = m1=" << sp.ras.m1 << " m2=" << sp.ras.m2
           << " nmax=" << sp.ras.nmax << " scheme=" << scheme_name(sp.ras.scheme) << "\n";
    }
    for (int i = 0; i < cfg.model.n_species(); ++i)
        for (int j = i + 1; j < cfg.model.n_species(); ++j)
            os << "model.lambda." << i << "." << j << " = " << cfg.model.lambda_inter(i, j)
               << "\n";
    os << "prop.mode = " << (cfg.prop.mode == PropMode::Imag ? "imag" : "real") << "\n";
    os << "prop.dt = " << cfg.prop.dt << "\n";
    os << "prop.max_steps = " << cfg.prop.max_steps << "\n";
    os << "prop.energy_tol = " << cfg.prop.energy_tol << "\n";
    os << "prop.ortho_tol = " << cfg.prop.ortho_tol << "\n";
    os << "output.dir = " << cfg.output_dir << "\n";
    os << "output.trace_every = " << cfg.prop.trace_every << "\n";
    os << "output.checkpoint = " << cfg.output_checkpoint << "\n";
    if (!cfg.init_checkpoint.empty()) os << "init.checkpoint = " << cfg.init_checkpoint << "\n";
    print_counts(os, cfg);
    os << "valid\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_override, bool quiet) {
    RunConfig cfg = load_config(config_path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    const Setup s = build_setup(cfg);

    WaveFunction initial = cfg.init_checkpoint.empty()
                               ? initial_guess(s.terms, s.space)
                               : load_checkpoint(cfg.init_checkpoint, s.space);
    if (initial.orbitals.at(0).rows() != s.grid.n)
        throw InvalidConfigError("checkpoint grid size does not match grid.n");

    const auto t0 = std::chrono::steady_clock::now();
    PropResult res;
    std::string status;
    bool failed_numerical = false;
    try {
        res = cfg.prop.mode == PropMode::Imag ? relax(initial, s.terms, cfg.prop)
                                              : propagate_real(initial, s.terms, cfg.prop);
        if (cfg.prop.mode == PropMode::Imag)
            status = res.converged ? "converged" : "not_converged";
        else
            status = "completed";
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        res.trace = e.trace;
        res.steps = e.trace.empty() ? 0 : e.trace.back().step;
        res.final_energy = e.trace.empty() ? 0.0 : e.trace.back().energy;
        status = "diverged";
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        res.trace = e.trace;
        res.steps = e.trace.empty() ? 0 : e.trace.back().step;
        res.final_energy = e.trace.empty() ? 0.0 : e.trace.back().energy;
        status = "numerical_failure";
        failed_numerical = true;
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::filesystem::create_directories(cfg.output_dir);
    write_trace_csv(cfg.output_dir + "/trace.csv", res.trace);
    if (status == "converged" || status == "not_converged" || status == "completed")
        save_checkpoint(cfg.output_dir + "/" + cfg.output_checkpoint, res.wf, cfg.model,
                        res.steps);

    {
        std::FILE* f = std::fopen((cfg.output_dir + "/summary.txt").c_str(), "w");
        if (!f) throw std::runtime_error("cannot open summary.txt for writing");
        std::fprintf(f, "status = %s\n", status.c_str());
        std::fprintf(f, "steps = %ld\n", res.steps);
        std::fprintf(f, "final_energy = %.17g\n", res.final_energy);
        std::fprintf(f, "config_count = %llu\n",
                     static_cast<unsigned long long>(
                         product_config_count(ras_specs(cfg.model), species_counts(cfg.model))));
        if (cfg.model.n_species() == 2) {
            try {
                const double exact = exact_him_energy(cfg.model);
                std::fprintf(f, "exact_energy = %.17g\n", exact);
                std::fprintf(f, "delta_e_vs_exact = %.17g\n", res.final_energy - exact);
            } catch (const InvalidConfigError&) {
                // unbound parameter regime: no finite reference energy
            }
        }
        std::fprintf(f, "wall_time_s = %.3f\n", wall);
        std::fclose(f);
    }

    if (!quiet) {
        std::printf("status = %s\n", status.c_str());
        std::printf("steps = %ld\n", res.steps);
        std::printf("final_energy = %.17g\n", res.final_energy);
    }
    if (failed_numerical) return 4;
    if (status == "diverged" || status == "not_converged") return 3;
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& sweep_path,
              const std::string& out_override) {
    RunConfig base = load_config(config_path);
    if (!out_override.empty()) base.output_dir = out_override;
    if (base.model.n_species() != 2)
        throw InvalidConfigError("sweep expects a two-species configuration");

    std::ifstream in(sweep_path);
    if (!in) throw InvalidConfigError("cannot open sweep file: " + sweep_path);
    struct Row {
        int nmax, M1, M2;
    };
    std::vector<Row> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream ls(line);
        Row r{};
        std::string extra;
        if (!(ls >> r.nmax >> r.M1 >> r.M2) || (ls >> extra))
            throw InvalidConfigError("sweep line " + std::to_string(lineno) +
                                     ": expected '<nmax> <M1> <M2>'");
        rows.push_back(r);
    }

    std::filesystem::create_directories(base.output_dir);
    std::FILE* f = std::fopen((base.output_dir + "/sweep_report.csv").c_str(), "w");
    if (!f) throw std::runtime_error("cannot open sweep_report.csv for writing");
    std::fprintf(f, "nmax,M1,M2,config_count,final_energy,delta_e,status\n");

    int worst = 0;
    for (const Row& r : rows) {
        RunConfig cfg = base;
        SpeciesParams& s0 = cfg.model.species[0];
        SpeciesParams& s1 = cfg.model.species[1];
        if (r.M1 < s0.ras.m1)
            throw InvalidConfigError("sweep M1 smaller than the base species-0 m1");
        s0.ras.m2 = r.M1 - s0.ras.m1;
        s0.ras.nmax = s0.ras.m2 > 0 ? r.nmax : 0;
        s1.ras.m1 = r.M2;   // second species kept at full CI
        s1.ras.m2 = 0;
        s1.ras.nmax = 0;

        const std::uint64_t count =
            product_config_count(ras_specs(cfg.model), species_counts(cfg.model));
        double energy = std::numeric_limits<double>::quiet_NaN();
        std::string status;
        try {
            const Setup s = build_setup(cfg);
            const PropResult res = relax(initial_guess(s.terms, s.space), s.terms, cfg.prop);
            energy = res.final_energy;
            status = res.converged ? "converged" : "not_converged";
            if (!res.converged) worst = std::max(worst, 3);
        } catch (const DivergenceError&) {
            status = "diverged";
            worst = std::max(worst, 3);
        } catch (const NumericalError&) {
            status = "numerical_failure";
            worst = std::max(worst, 4);
        }
        const double exact = exact_him_energy(cfg.model);
        std::fprintf(f, "%d,%d,%d,%llu,%.17g,%.17g,%s\n", r.nmax, r.M1, r.M2,
                     static_cast<unsigned long long>(count), energy, energy - exact,
                     status.c_str());
        std::fflush(f);
    }
    std::fclose(f);
    return worst;
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"multispecies RAS self-consistent-field solver for trapped boson mixtures"};
    app.require_subcommand(1);

    std::string config_path, out_override, sweep_path;
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "suppress progress output on stdout");

    CLI::App* run = app.add_subcommand("run", "relax or propagate one configuration");
    run->add_option("-c,--config", config_path, "config file")->required();
    run->add_option("-o,--out", out_override, "output directory (overrides output.dir)");

    CLI::App* sweep = app.add_subcommand("sweep", "run a series of RAS truncations");
    sweep->add_option("-c,--config", config_path, "config file")->required();
    sweep->add_option("-s,--sweep", sweep_path, "sweep file: lines '<nmax> <M1> <M2>'")
        ->required();
    sweep->add_option("-o,--out", out_override, "output directory (overrides output.dir)");

    CLI::App* count = app.add_subcommand("count", "print configuration-space sizes");
    count->add_option("-c,--config", config_path, "config file")->required();

    CLI::App* validate = app.add_subcommand("validate", "parse and echo a configuration");
    validate->add_option("-c,--config", config_path, "config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, out_override, quiet);
        if (sweep->parsed()) return cmd_sweep(config_path, sweep_path, out_override);
        if (count->parsed()) return cmd_count(config_path);
        if (validate->parsed()) return cmd_validate(config_path);
        return 2;
    } catch (const InvalidConfigError& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return 2;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace rasmix
