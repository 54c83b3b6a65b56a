#include "rasmix/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace rasmix {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

long long parse_int(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(value, &pos);
    } catch (const std::exception&) {
        throw InvalidConfigError("expected integer for '" + key + "', got '" + value + "'");
    }
    if (pos != value.size())
        throw InvalidConfigError("expected integer for '" + key + "', got '" + value + "'");
    return v;
}

double parse_real(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw InvalidConfigError("expected number for '" + key + "', got '" + value + "'");
    }
    if (pos != value.size())
        throw InvalidConfigError("expected number for '" + key + "', got '" + value + "'");
    return v;
}

struct KeyValueMap {
    std::map<std::string, std::string> kv;

    bool has(const std::string& k) const { return kv.count(k) != 0; }
    long long get_int(const std::string& k, long long dflt) const {
        auto it = kv.find(k);
        return it == kv.end() ? dflt : parse_int(k, it->second);
    }
    double get_real(const std::string& k, double dflt) const {
        auto it = kv.find(k);
        return it == kv.end() ? dflt : parse_real(k, it->second);
    }
    std::string get_str(const std::string& k, const std::string& dflt) const {
        auto it = kv.find(k);
        return it == kv.end() ? dflt : it->second;
    }
};

std::map<std::string, std::string> parse_lines(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidConfigError("line " + std::to_string(lineno) +
                                     ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw InvalidConfigError("line " + std::to_string(lineno) + ": empty key");
        if (kv.count(key))
            throw InvalidConfigError("duplicate key '" + key + "'");
        kv[key] = value;
    }
    return kv;
}

std::vector<std::string> known_keys(int nspecies) {
    std::vector<std::string> keys = {
        "grid.n",     "grid.xmin",        "grid.xmax",      "model.nspecies",
        "model.omega", "prop.mode",       "prop.dt",        "prop.max_steps",
        "prop.energy_tol", "prop.ortho_tol", "init.checkpoint", "output.dir",
        "output.trace_every", "output.checkpoint"};
    for (int k = 0; k < nspecies; ++k) {
        const std::string p = "species." + std::to_string(k) + ".";
        keys.push_back(p + "count");
        keys.push_back(p + "mass");
        keys.push_back(p + "lambda");
        keys.push_back(p + "ras.m1");
        keys.push_back(p + "ras.m2");
        keys.push_back(p + "ras.nmax");
        keys.push_back(p + "ras.scheme");
    }
    for (int i = 0; i < nspecies; ++i)
        for (int j = 0; j < nspecies; ++j)
            if (i != j)
                keys.push_back("model.lambda." + std::to_string(i) + "." +
                               std::to_string(j));
    return keys;
}

int checked_int_cast(const std::string& key, long long v, long long lo, long long hi) {
    if (v < lo || v > hi)
        throw InvalidConfigError("value of '" + key + "' out of range");
    return static_cast<int>(v);
}

} // namespace

std::string config_env_name(const std::string& key) {
    std::string name = "RASMIX_";
    for (char c : key)
        name += (c == '.') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return name;
}

RunConfig parse_config(const std::string& text, bool apply_env) {
    auto kv = parse_lines(text);

    // The species count determines the admissible key set, so resolve it
    // first (environment wins over the file, as everywhere else).
    long long nspecies_raw = -1;
    if (apply_env) {
        if (const char* e = std::getenv(config_env_name("model.nspecies").c_str()))
            nspecies_raw = parse_int("model.nspecies", e);
    }
    if (nspecies_raw < 0) {
        auto it = kv.find("model.nspecies");
        if (it == kv.end()) throw InvalidConfigError("missing required key 'model.nspecies'");
        nspecies_raw = parse_int("model.nspecies", it->second);
    }
    const int K = checked_int_cast("model.nspecies", nspecies_raw, 1, 16);

    const std::vector<std::string> keys = known_keys(K);
    for (const auto& [k, v] : kv) {
        bool ok = false;
        for (const auto& known : keys)
            if (k == known) {
                ok = true;
                break;
            }
        if (!ok) throw InvalidConfigError("unknown config key '" + k + "'");
    }
    if (apply_env) {
        for (const auto& k : keys)
            if (const char* e = std::getenv(config_env_name(k).c_str())) kv[k] = e;
    }

    KeyValueMap m{std::move(kv)};
    RunConfig cfg;
    cfg.grid_n = checked_int_cast("grid.n", m.get_int("grid.n", cfg.grid_n), 2, 1 << 20);
    cfg.grid_xmin = m.get_real("grid.xmin", cfg.grid_xmin);
    cfg.grid_xmax = m.get_real("grid.xmax", cfg.grid_xmax);
    if (!(cfg.grid_xmax > cfg.grid_xmin))
        throw InvalidConfigError("grid.xmax must exceed grid.xmin");

    cfg.model.omega = m.get_real("model.omega", 1.0);
    if (!(cfg.model.omega > 0.0)) throw InvalidConfigError("model.omega must be positive");
    cfg.model.species.resize(K);
    cfg.model.lambda_inter = MatrixXd::Zero(K, K);
    for (int k = 0; k < K; ++k) {
        const std::string p = "species." + std::to_string(k) + ".";
        SpeciesParams& sp = cfg.model.species[k];
        if (!m.has(p + "count"))
            throw InvalidConfigError("missing required key '" + p + "count'");
        sp.count = checked_int_cast(p + "count", m.get_int(p + "count", 0), 1, 1 << 30);
        sp.mass = m.get_real(p + "mass", 1.0);
        if (!(sp.mass > 0.0)) throw InvalidConfigError("'" + p + "mass' must be positive");
        sp.lambda = m.get_real(p + "lambda", 0.0);
        sp.ras.m1 = checked_int_cast(p + "ras.m1", m.get_int(p + "ras.m1", 1), 1, 1 << 12);
        sp.ras.m2 = checked_int_cast(p + "ras.m2", m.get_int(p + "ras.m2", 0), 0, 1 << 12);
        sp.ras.nmax =
            checked_int_cast(p + "ras.nmax", m.get_int(p + "ras.nmax", 0), 0, 1 << 30);
        const std::string scheme = m.get_str(p + "ras.scheme", "general");
        if (scheme == "general")
            sp.ras.scheme = RasScheme::General;
        else if (scheme == "even")
            sp.ras.scheme = RasScheme::EvenOnly;
        else
            throw InvalidConfigError("'" + p + "ras.scheme' must be 'general' or 'even', got '" +
                                     scheme + "'");
        if (sp.ras.m2 == 0 && sp.ras.nmax != 0)
            throw InvalidConfigError("'" + p + "ras.nmax' requires '" + p + "ras.m2' > 0");
        if (sp.ras.total_orbitals() > cfg.grid_n)
            throw InvalidConfigError("species " + std::to_string(k) +
                                     " requests more orbitals than grid points");
    }
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) {
            if (i == j) continue;
            const std::string key =
                "model.lambda." + std::to_string(i) + "." + std::to_string(j);
            if (!m.has(key)) continue;
            const double v = parse_real(key, m.kv.at(key));
            const std::string mirror =
                "model.lambda." + std::to_string(j) + "." + std::to_string(i);
            if (m.has(mirror) && parse_real(mirror, m.kv.at(mirror)) != v)
                throw InvalidConfigError("'" + key + "' and '" + mirror + "' disagree");
            cfg.model.lambda_inter(i, j) = v;
            cfg.model.lambda_inter(j, i) = v;
        }

    const std::string mode = m.get_str("prop.mode", "imag");
    if (mode == "imag")
        cfg.prop.mode = PropMode::Imag;
    else if (mode == "real")
        cfg.prop.mode = PropMode::Real;
    else
        throw InvalidConfigError("'prop.mode' must be 'imag' or 'real', got '" + mode + "'");
    cfg.prop.dt = m.get_real("prop.dt", cfg.prop.dt);
    if (!(cfg.prop.dt > 0.0)) throw InvalidConfigError("'prop.dt' must be positive");
    cfg.prop.max_steps = m.get_int("prop.max_steps", cfg.prop.max_steps);
    if (cfg.prop.max_steps < 0)
        throw InvalidConfigError("'prop.max_steps' must be non-negative");
    cfg.prop.energy_tol = m.get_real("prop.energy_tol", cfg.prop.energy_tol);
    if (!(cfg.prop.energy_tol > 0.0))
        throw InvalidConfigError("'prop.energy_tol' must be positive");
    cfg.prop.ortho_tol = m.get_real("prop.ortho_tol", cfg.prop.ortho_tol);
    if (!(cfg.prop.ortho_tol > 0.0))
        throw InvalidConfigError("'prop.ortho_tol' must be positive");
    cfg.prop.trace_every = m.get_int("output.trace_every", cfg.prop.trace_every);
    if (cfg.prop.trace_every < 1)
        throw InvalidConfigError("'output.trace_every' must be at least 1");

    cfg.init_checkpoint = m.get_str("init.checkpoint", "");
    cfg.output_dir = m.get_str("output.dir", cfg.output_dir);
    cfg.output_checkpoint = m.get_str("output.checkpoint", cfg.output_checkpoint);
    return cfg;
}

RunConfig load_config(const std::string& path, bool apply_env) {
    std::ifstream in(path);
    if (!in) throw InvalidConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), apply_env);
}

} // namespace rasmix
