#pragma once

#include <string>

#include "rasmix/model.hpp"
#include "rasmix/propagator.hpp"

namespace rasmix {

// Parsed run configuration.  Input files are flat "key = value" lines with
// dotted section names (e.g. "grid.n = 101"); '#' starts a comment.  Every
// recognized key can be overridden from the environment as
// RASMIX_<KEY> with dots replaced by underscores, uppercased
// (grid.n -> RASMIX_GRID_N).
struct RunConfig {
    int grid_n = 101;
    double grid_xmin = -5.0;
    double grid_xmax = 5.0;
    ModelParams model;
    PropSettings prop;
    std::string init_checkpoint;          // empty: start from the one-body guess
    std::string output_dir = "out";
    std::string output_checkpoint = "final.chk";
};

// Environment variable bound to a config key.
std::string config_env_name(const std::string& key);

// Parse config text; unknown keys raise InvalidConfigError naming the key.
// With apply_env, environment overrides are folded in before validation.
RunConfig parse_config(const std::string& text, bool apply_env = true);

RunConfig load_config(const std::string& path, bool apply_env = true);

} // namespace rasmix
