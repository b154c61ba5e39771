#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "thinfilm/harness.hpp"

using namespace thinfilm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string parse_error_of(const std::string& text, const std::string& hint = "") {
    try {
        parse_config(text, hint);
    } catch (const std::invalid_argument& e) {
        return e.what();
    }
    return "";
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json manifest_without_timing(const fs::path& dir) {
    json m = json::parse(slurp(dir / "manifest.json"));
    m.erase("wall_time_s");
    return m;
}

fs::path fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("config validation names the offending key") {
    CHECK(parse_error_of(R"({"kind":"evolve","bogus":1})").find("bogus") != std::string::npos);
    CHECK(parse_error_of(R"({"kind":"wiggle"})").find("kind") != std::string::npos);
    CHECK(parse_error_of(R"({"kind":"steady"})", "evolve").find("conflicts") != std::string::npos);
    CHECK(parse_error_of(R"({"kind":"evolve","hbar":1.0,"grid.X":6.0,"grid.N":100})").find("grid.N") !=
          std::string::npos);
    CHECK(parse_error_of(R"({"kind":"evolve","hbar":1.0,"grid.X":6.0,"controls.epsilon":"big"})")
              .find("controls.epsilon") != std::string::npos);
    CHECK(!parse_error_of("{not json").empty());
}

TEST_CASE("exponent bookkeeping: m wins, else q + n - 1, else q = 1") {
    ExperimentConfig a = parse_config(R"({"kind":"evolve","hbar":1.0,"grid.X":6.0,"n":2.0,"m":3.5})");
    CHECK(a.resolved_m() == 3.5);
    CHECK(a.resolved_q() == doctest::Approx(2.5));
    ExperimentConfig b = parse_config(R"({"kind":"evolve","hbar":1.0,"grid.X":6.0,"n":2.0,"q":2.5})");
    CHECK(b.resolved_m() == doctest::Approx(3.5));
    ExperimentConfig c = parse_config(R"({"kind":"evolve","hbar":1.0,"grid.X":6.0,"n":2.0})");
    CHECK(c.resolved_q() == doctest::Approx(1.0));
    // both given and inconsistent
    CHECK(parse_error_of(R"({"kind":"evolve","hbar":1.0,"grid.X":6.0,"n":2.0,"m":3.5,"q":2.0})")
              .find("disagree") != std::string::npos);
    // both given and consistent
    CHECK(parse_error_of(R"({"kind":"evolve","hbar":1.0,"grid.X":6.0,"n":2.0,"m":3.5,"q":2.5})").empty());
}

TEST_CASE("evolve requires exactly one initial-data mode") {
    CHECK(parse_error_of(R"({"kind":"evolve"})").find("exactly one") != std::string::npos);
    CHECK(parse_error_of(R"({"kind":"evolve","alpha":0.2,"hbar":1.0,"q":2.5,"target_period":6.0})")
              .find("exactly one") != std::string::npos);
    CHECK(parse_error_of(
              R"js({"kind":"evolve","initial":"1+0.1*cos(x)","grid.X":6.0,"initial_file":"f.csv"})js")
              .find("at most one") != std::string::npos);
    CHECK(parse_error_of(R"js({"kind":"evolve","initial":"1+0.1*cos(x)"})js").find("grid.X") !=
          std::string::npos);
    CHECK(parse_error_of(R"({"kind":"evolve","hbar":1.0})").find("grid.X") != std::string::npos);
    // alpha-mode: target_period mandatory, grid.X must agree when present
    CHECK(parse_error_of(R"({"kind":"evolve","alpha":0.2,"q":2.5})").find("target_period") != std::string::npos);
    CHECK(parse_error_of(R"({"kind":"evolve","alpha":0.2,"q":2.5,"target_period":6.0,"grid.X":7.0})")
              .find("grid.X") != std::string::npos);
}

TEST_CASE("sweep configs carry q and a strictly increasing n_list") {
    const char* good = R"({"kind":"sweep","alpha":0.2,"q":2.5,"target_period":6.0,"n_list":[0.0,1.0,2.0]})";
    CHECK(parse_error_of(good).empty());
    CHECK(parse_error_of(R"({"kind":"sweep","alpha":0.2,"q":2.5,"target_period":6.0})").find("n_list") !=
          std::string::npos);
    CHECK(parse_error_of(
              R"({"kind":"sweep","alpha":0.2,"q":2.5,"target_period":6.0,"n_list":[1.0,1.0]})")
              .find("increasing") != std::string::npos);
    CHECK(parse_error_of(
              R"({"kind":"sweep","alpha":0.2,"q":2.5,"m":3.0,"target_period":6.0,"n_list":[1.0,2.0]})")
              .find("m") != std::string::npos);
    // n_list outside sweep is rejected
    CHECK(parse_error_of(R"({"kind":"evolve","hbar":1.0,"grid.X":6.0,"n_list":[1.0]})").find("n_list") !=
          std::string::npos);
}

TEST_CASE("initial-data expressions follow the documented grammar") {
    CHECK(eval_initial_expression("1 + 0.5*cos(x)", 0.3) == doctest::Approx(1.0 + 0.5 * std::cos(0.3)));
    CHECK(eval_initial_expression("2*pi", 0.0) == doctest::Approx(2.0 * M_PI));
    CHECK(eval_initial_expression("sin^2(x) + cos^2(x)", 0.77) == doctest::Approx(1.0));
    CHECK(eval_initial_expression("exp(-x)*(1+x)", 2.0) == doctest::Approx(std::exp(-2.0) * 3.0));
    CHECK(eval_initial_expression("2+3*4^2", 0.0) == doctest::Approx(50.0));
    CHECK(eval_initial_expression("2^3^2", 0.0) == doctest::Approx(512.0));  // right associative
    CHECK(eval_initial_expression("4^-0.5", 0.0) == doctest::Approx(0.5));
    CHECK(eval_initial_expression("-x^2", 3.0) == doctest::Approx(-9.0));
    CHECK(eval_initial_expression("6/3/2", 0.0) == doctest::Approx(1.0));
    CHECK(eval_initial_expression("((3))", 0.0) == doctest::Approx(3.0));
    CHECK_THROWS_AS(eval_initial_expression("1 +", 0.0), std::invalid_argument);
    CHECK_THROWS_AS(eval_initial_expression("1 2", 0.0), std::invalid_argument);
    CHECK_THROWS_AS(eval_initial_expression("foo(x)", 0.0), std::invalid_argument);
    CHECK_THROWS_AS(eval_initial_expression("cos(x", 0.0), std::invalid_argument);
    CHECK_THROWS_AS(eval_initial_expression("", 0.0), std::invalid_argument);
}

TEST_CASE("seed override lands in the echo") {
    ExperimentConfig cfg = parse_config(
        R"({"kind":"evolve","hbar":1.0,"grid.X":6.0,"perturbation.kind":"random","perturbation.amplitude":0.001})");
    CHECK(cfg.pert_seed == 1);
    override_seed(cfg, 42);
    CHECK(cfg.pert_seed == 42);
    CHECK(cfg.echo["perturbation.seed"].get<std::uint64_t>() == 42);
}

TEST_CASE("a run is reproducible from its own echoed manifest") {
    // identical artifacts twice, and a third time when restarted from the
    // config block the first manifest echoed back
    json cfg_json = {
        {"kind", "evolve"},
        {"n", 1.0},
        {"m", 1.5},
        {"bond", 0.5},
        {"hbar", 1.0},
        {"grid.X", 2.0 * M_PI},
        {"grid.N", 64},
        {"perturbation.kind", "cosine"},
        {"perturbation.amplitude", 0.01},
        {"perturbation.wavenumber", 1.0},
        {"controls.t_max", 0.02},
        {"controls.dt_init", 1e-4},
        {"output.snapshot_every", 5},
    };
    ExperimentConfig cfg = parse_config(cfg_json.dump());

    fs::path da = fresh_dir("tf_harness_rep_a");
    fs::path db = fresh_dir("tf_harness_rep_b");
    fs::path dc = fresh_dir("tf_harness_rep_c");
    REQUIRE(run_experiment(cfg, da) == 0);
    REQUIRE(run_experiment(cfg, db) == 0);

    json ma = manifest_without_timing(da);
    json mb = manifest_without_timing(db);
    CHECK(ma == mb);
    CHECK(slurp(da / "series.csv") == slurp(db / "series.csv"));
    CHECK(slurp(da / "snap_final.csv") == slurp(db / "snap_final.csv"));

    ExperimentConfig echoed = parse_config(ma["config"].dump());
    REQUIRE(run_experiment(echoed, dc) == 0);
    CHECK(manifest_without_timing(dc) == ma);
    CHECK(slurp(dc / "series.csv") == slurp(da / "series.csv"));

    // --out is delivery only: the echoed config still carries the configured dir
    CHECK(ma["config"]["output.dir"].get<std::string>() == "out");

    fs::remove_all(da);
    fs::remove_all(db);
    fs::remove_all(dc);
}

TEST_CASE("snapshot files are written at the configured cadence") {
    json cfg_json = {
        {"kind", "evolve"},    {"hbar", 1.0},
        {"grid.X", 2.0 * M_PI}, {"grid.N", 64},
        {"controls.t_max", 0.01}, {"controls.dt_init", 1e-3},
        {"controls.fixed_dt", 1e-3}, {"output.snapshot_every", 4},
    };
    ExperimentConfig cfg = parse_config(cfg_json.dump());
    fs::path dir = fresh_dir("tf_harness_snap");
    REQUIRE(run_experiment(cfg, dir) == 0);
    json m = json::parse(slurp(dir / "manifest.json"));
    REQUIRE(m["artifacts"].contains("snapshots"));
    for (const auto& name : m["artifacts"]["snapshots"]) {
        CAPTURE(name.get<std::string>());
        CHECK(fs::exists(dir / name.get<std::string>()));
    }
    // 10 fixed steps at cadence 4: steps 4 and 8
    CHECK(m["artifacts"]["snapshots"].size() == 2);
    fs::remove_all(dir);
}

}
