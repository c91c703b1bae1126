#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <biharm4/config.h>
#include <biharm4/errors.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace biharm4;
namespace fs = std::filesystem;

namespace {

const std::string cli = BIHARM4_CLI_PATH;

int run(const std::string& args) {
    const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const char* tag) {
    fs::path d = fs::temp_directory_path() / (std::string("biharm4_cli_") + tag);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

} // namespace

TEST_CASE("exit codes: help, bad flags, bad environment") {
    CHECK(run("--help") == 0);
    CHECK(run("no-such-subcommand") == 2);
    CHECK(run("verify-identity --no-such-flag") == 2);
    CHECK(run("") == 2); // a subcommand is required

    const std::string cmd = "env BIHARM4_THREADS=abc " + cli +
                            " verify-identity >/dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 2);
}

TEST_CASE("a config failing its own tolerance exits 1") {
    fs::path d = fresh_dir("failtol");
    std::ofstream(d / "cfg.json") << R"({"tolerances": {"identity_rel": 1e-300}})";
    const int rc = run("verify-identity --config " + (d / "cfg.json").string() +
                       " --out " + d.string());
    CHECK(rc == 1);
    CHECK(fs::exists(d / "verify_identity.json")); // report still written
}

TEST_CASE("malformed config exits 2") {
    fs::path d = fresh_dir("badcfg");
    std::ofstream(d / "cfg.json") << R"({"grid_m": 8})";
    CHECK(run("verify-identity --config " + (d / "cfg.json").string()) == 2);
    std::ofstream(d / "bad.json") << "{ not json";
    CHECK(run("verify-identity --config " + (d / "bad.json").string()) == 2);
}

TEST_CASE("reports are byte-identical across runs") {
    fs::path d = fresh_dir("determinism");
    REQUIRE(run("verify-potentials --out " + d.string()) == 0);
    const std::string first = slurp(d / "verify_potentials.json");
    REQUIRE(run("verify-potentials --out " + d.string()) == 0);
    CHECK(first == slurp(d / "verify_potentials.json"));
    CHECK(!first.empty());

    // a different seed must change the report
    REQUIRE(run("verify-potentials --seed 999 --out " + d.string()) == 0);
    CHECK(first != slurp(d / "verify_potentials.json"));
}

TEST_CASE("flow run emits the trajectory table") {
    fs::path d = fresh_dir("flow");
    fs::path cfg = d / "cfg.json";
    std::ofstream(cfg) << R"({"t_end": 2e-3})";
    REQUIRE(run("flow-run --config " + cfg.string() + " --out " + d.string()) == 0);
    std::ifstream csv(d / "trajectory.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header ==
          "step,t,dt,energy_ext,energy_int,grad_norm,kappa,R_t,divJ_norm,rejected_steps");
    int lines = 0;
    for (std::string row; std::getline(csv, row);)
        if (!row.empty()) ++lines;
    CHECK(lines == 3); // step 0 plus two steps
    CHECK(fs::exists(d / "flow_summary.json"));
}

TEST_CASE("config parsing: defaults, unknown keys, ranges") {
    RunConfig def = parse_config_text("{}");
    CHECK(def.grid_n == default_config().grid_n);
    CHECK(def.seed == default_config().seed);
    CHECK(def.tolerances.size() == default_tolerances().size());

    CHECK_THROWS_AS((void)parse_config_text(R"({"grid_m": 8})"), ConfigError);
    CHECK_THROWS_AS((void)parse_config_text(R"({"grid_n": 7})"), ConfigError);
    CHECK_THROWS_AS((void)parse_config_text(R"({"grid_n": "8"})"), ConfigError);
    CHECK_THROWS_AS((void)parse_config_text(R"({"dt": 0})"), ConfigError);
    CHECK_THROWS_AS((void)parse_config_text(R"({"energy": "quartic"})"), ConfigError);
    CHECK_THROWS_AS((void)parse_config_text(R"({"tolerances": {"bogus": 1.0}})"),
                    ConfigError);
    CHECK_THROWS_AS((void)parse_config_text(R"({"tolerances": {"identity_rel": 0}})"),
                    ConfigError);
    CHECK_THROWS_AS((void)parse_config_text(R"({"target": {"kind": "klein_bottle"}})"),
                    ConfigError);
    CHECK_THROWS_AS(
        (void)parse_config_text(R"({"target": {"kind": "torus_of_revolution"}, "ambient_dim": 4})"),
        ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[1, 2]"), ConfigError);

    RunConfig t = parse_config_text(
        R"({"target": {"kind": "torus_of_revolution", "major_radius": 3.0}})");
    CHECK(t.target.kind == "torus_of_revolution");
    CHECK(t.target.major_radius == 3.0);
    Target tt = make_target(t);
    CHECK(tt.kind == Target::Kind::implicit);
}
