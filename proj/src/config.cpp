#include "biharm4/config.h"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace biharm4 {

using nlohmann::json;

const std::map<std::string, double>& default_tolerances() {
    static const std::map<std::string, double> tbl = {
        {"identity_rel", 1e-6},       // refinement-identity residual vs field norms
        {"divw_rel", 1e-6},           // div W for the sphere potentials
        {"splitting_rel", 1e-8},      // W = grad(omega) + F reassembly
        {"calibration_rel", 1e-4},    // variational sign calibration
        {"residual_great_circle", 1e-6},
        {"builder_agreement", 1e-6},  // sphere vs projector-path residuals
        {"coulomb_residual", 1e-10},
        {"uhlenbeck_residual", 1e-8},
        {"gauge_residual", 1e-6},     // Picard (A,B) gauge equation
        {"flow_energy_slack", 1e-10}, // per-step relative energy increase allowed
        {"on_target", 1e-10},
        {"equivariance", 1e-12},
        {"energy_identity_rel", 1e-10},
        {"kappa_match", 1e-10},       // windowed vs brute-force concentration
    };
    return tbl;
}

RunConfig default_config() {
    RunConfig cfg;
    cfg.tolerances = default_tolerances();
    return cfg;
}

namespace {

[[noreturn]] void bad(const std::string& msg) { throw ConfigError("config: " + msg); }

double get_number(const json& v, const std::string& key) {
    if (!v.is_number()) bad("'" + key + "' must be a number");
    return v.get<double>();
}

void parse_target(const json& j, TargetConfig& t) {
    if (!j.is_object()) bad("'target' must be an object");
    for (const auto& [key, val] : j.items()) {
        if (key == "kind") {
            if (!val.is_string()) bad("'target.kind' must be a string");
            t.kind = val.get<std::string>();
        } else if (key == "major_radius") {
            t.major_radius = get_number(val, "target.major_radius");
        } else if (key == "minor_radius") {
            t.minor_radius = get_number(val, "target.minor_radius");
        } else if (key == "tube_radius") {
            t.tube_radius = get_number(val, "target.tube_radius");
        } else {
            bad("unknown key 'target." + key + "'");
        }
    }
    if (t.kind != "sphere" && t.kind != "torus_of_revolution")
        bad("unsupported target.kind '" + t.kind + "'");
}

void parse_tolerances(const json& j, std::map<std::string, double>& tol) {
    if (!j.is_object()) bad("'tolerances' must be an object");
    for (const auto& [key, val] : j.items()) {
        if (default_tolerances().count(key) == 0) bad("unknown tolerance '" + key + "'");
        const double v = get_number(val, "tolerances." + key);
        if (!(v > 0.0)) bad("tolerance '" + key + "' must be positive");
        tol[key] = v;
    }
}

} // namespace

RunConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        bad(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) bad("top level must be a JSON object");

    RunConfig cfg = default_config();
    for (const auto& [key, val] : j.items()) {
        if (key == "grid_n") {
            if (!val.is_number_integer()) bad("'grid_n' must be an integer");
            cfg.grid_n = val.get<int>();
        } else if (key == "ambient_dim") {
            if (!val.is_number_integer()) bad("'ambient_dim' must be an integer");
            cfg.ambient_dim = val.get<int>();
        } else if (key == "target") {
            parse_target(val, cfg.target);
        } else if (key == "energy") {
            if (!val.is_string()) bad("'energy' must be a string");
            cfg.energy = val.get<std::string>();
        } else if (key == "seed") {
            if (!val.is_number_integer()) bad("'seed' must be a nonnegative integer");
            if (!val.is_number_unsigned() && val.get<long long>() < 0)
                bad("'seed' must be a nonnegative integer");
            cfg.seed = val.get<std::uint64_t>();
        } else if (key == "dt") {
            cfg.dt = get_number(val, "dt");
        } else if (key == "t_end") {
            cfg.t_end = get_number(val, "t_end");
        } else if (key == "epsilon") {
            cfg.epsilon = get_number(val, "epsilon");
        } else if (key == "gauge_epsilon") {
            cfg.gauge_epsilon = get_number(val, "gauge_epsilon");
        } else if (key == "init_amplitude") {
            cfg.init_amplitude = get_number(val, "init_amplitude");
        } else if (key == "tolerances") {
            parse_tolerances(val, cfg.tolerances);
        } else if (key == "out_dir") {
            if (!val.is_string()) bad("'out_dir' must be a string");
            cfg.out_dir = val.get<std::string>();
        } else {
            bad("unknown key '" + key + "'");
        }
    }

    if (cfg.grid_n < 8 || cfg.grid_n % 2 != 0) bad("grid_n must be even and >= 8");
    if (cfg.ambient_dim < 2) bad("ambient_dim must be >= 2");
    if (cfg.energy != "extrinsic" && cfg.energy != "intrinsic")
        bad("energy must be 'extrinsic' or 'intrinsic'");
    if (!(cfg.dt > 0.0)) bad("dt must be positive");
    if (!(cfg.t_end >= 0.0)) bad("t_end must be nonnegative");
    if (!(cfg.epsilon > 0.0)) bad("epsilon must be positive");
    if (!(cfg.gauge_epsilon > 0.0)) bad("gauge_epsilon must be positive");
    if (!(cfg.init_amplitude >= 0.0)) bad("init_amplitude must be nonnegative");
    if (cfg.target.kind == "torus_of_revolution") {
        if (cfg.ambient_dim != 3) bad("torus_of_revolution requires ambient_dim = 3");
        if (!(cfg.target.minor_radius > 0.0) ||
            !(cfg.target.major_radius > cfg.target.minor_radius))
            bad("torus_of_revolution requires 0 < minor_radius < major_radius");
        if (!(cfg.target.tube_radius > 0.0)) bad("tube_radius must be positive");
    }
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) bad("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

Target make_target(const RunConfig& cfg) {
    if (cfg.target.kind == "sphere") return make_sphere_target(cfg.ambient_dim);
    return make_torus_of_revolution_target(cfg.target.major_radius, cfg.target.minor_radius,
                                           cfg.target.tube_radius);
}

} // namespace biharm4
