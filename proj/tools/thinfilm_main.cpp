#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "thinfilm/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"thinfilm: steady states, evolution, and outcome maps for\n"
                 "  h_t = -(h^n h_xxx)_x - B (h^m h_x)_x   on a periodic domain"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;

    const struct {
        const char* name;
        const char* desc;
    } kinds[] = {
        {"steady", "construct one steady state and write its profile and invariants"},
        {"evolve", "time-step an initial condition and classify the outcome"},
        {"sweep", "repeat one evolution over a list of mobility exponents n"},
        {"bifurcation", "trace a steady-state branch over the family parameter alpha"},
        {"analyze", "post-process a finished evolution directory"},
    };
    for (const auto& k : kinds) {
        CLI::App* sub = app.add_subcommand(k.name, k.desc);
        sub->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
        sub->add_option("--seed", seed, "override perturbation.seed");
    }

    CLI11_PARSE(app, argc, argv);
    CLI::App* sub = app.get_subcommands().front();

    try {
        thinfilm::ExperimentConfig cfg = thinfilm::load_config(config_path, sub->get_name());
        if (sub->count("--seed") > 0) thinfilm::override_seed(cfg, seed);
        std::optional<std::filesystem::path> out;
        if (sub->count("--out") > 0) out = std::filesystem::path(out_dir);
        return thinfilm::run_experiment(cfg, out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
