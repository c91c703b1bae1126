#pragma once

//==============================================================================
// config.h
// Run configuration: a single JSON document, strictly validated. Unknown keys
// are rejected at every nesting level so a typo cannot silently fall back to a
// default. Tolerance names are flat; the CLI --help text lists them.
//==============================================================================

#include "biharm4/targets.h"

#include <cstdint>
#include <map>
#include <string>

namespace biharm4 {

struct TargetConfig {
    std::string kind = "sphere"; // "sphere" | "torus_of_revolution"
    double major_radius = 2.0;   // torus only
    double minor_radius = 0.5;
    double tube_radius = 0.2;
};

struct RunConfig {
    int grid_n = 8;
    int ambient_dim = 3;
    TargetConfig target;
    std::string energy = "extrinsic"; // "extrinsic" | "intrinsic"
    std::uint64_t seed = 2026;
    double dt = 1e-3;
    double t_end = 5e-2;
    double epsilon = 1.0;         // concentration threshold; R_t solves kappa = epsilon/2
    double gauge_epsilon = 3e-4;  // potential smallness for the (A,B) construction
    double init_amplitude = 0.05; // amplitude of the seeded initial perturbation
    std::map<std::string, double> tolerances; // defaults filled in; fixed name set
    std::string out_dir = ".";
};

// Tolerance table accepted under "tolerances"; any other name is a ConfigError.
const std::map<std::string, double>& default_tolerances();

RunConfig default_config();

// Throws ConfigError on malformed JSON, unknown keys, wrong types, or
// out-of-range values.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);

Target make_target(const RunConfig& cfg);

} // namespace biharm4
