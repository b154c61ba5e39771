#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "thinfilm/evolution.hpp"

namespace thinfilm {

// Fully resolved experiment description. Loaded from a flat JSON object whose keys are
// literal dotted names ("controls.epsilon"); unknown keys are rejected, defaults are
// materialized, and the result echoes back out through the manifest so any run can be
// regenerated from its own manifest.
struct ExperimentConfig {
    std::string kind;  // steady | evolve | sweep | bifurcation | analyze

    double n = 1.0;
    std::optional<double> m, q;
    std::vector<double> n_list;
    std::optional<double> bond, alpha, hbar, target_period;

    int grid_n = 1024;
    std::optional<double> grid_x;
    std::string steady_phase = "min";  // profile minimum ("min") or maximum ("peak") at x = 0

    std::optional<std::string> initial_expr;
    std::optional<std::string> initial_file;

    std::string pert_kind = "none";
    double pert_amplitude = 0.0;
    double pert_wavenumber = 1.0;
    double pert_decay = 0.036;
    std::uint64_t pert_seed = 1;

    StepControls controls;  // snapshot cadence lives under output.*
    int snapshot_every = 0;
    std::string out_dir = "out";

    double classify_tol = 1e-6;
    double analyze_p = 0.2;
    std::optional<std::string> analyze_dir, analyze_steady_file;

    double bif_alpha_min = 0.02;
    double bif_alpha_max = 0.98;
    int bif_count = 40;
    double bif_q_upper = 1.794;

    bool sweep_refine = false;
    int sweep_refine_iterations = 6;
    int sweep_workers = 1;

    nlohmann::json echo;  // resolved flat config, reloadable as-is

    // Exponent bookkeeping: m wins when given, else q + n - 1, else n (q = 1).
    double resolved_m() const;
    double resolved_q() const { return resolved_m() - n + 1.0; }
};

// Parse and validate a config file (or in-memory JSON text). kind_hint enforces or
// supplies the experiment kind from a CLI subcommand. Throws std::invalid_argument
// naming the offending key.
ExperimentConfig load_config(const std::filesystem::path& file, const std::string& kind_hint = "");
ExperimentConfig parse_config(const std::string& json_text, const std::string& kind_hint = "");

// CLI overrides: --seed replaces perturbation.seed (echoed, it is physics); --out only
// redirects artifact delivery and is not echoed.
void override_seed(ExperimentConfig& cfg, std::uint64_t seed);

// Evaluate the restricted initial-data expression grammar (sums and products of
// numbers, pi, x, cos, sin, exp, parentheses, ^ with integer powers) at one point.
double eval_initial_expression(const std::string& expr, double x);

// Run the experiment, writing artifacts under out_dir_override (when set) or
// cfg.out_dir. Returns a process exit status: 0 on success, 1 when a numerical failure
// was recorded in the manifest (partial artifacts retained).
int run_experiment(const ExperimentConfig& cfg,
                   const std::optional<std::filesystem::path>& out_dir_override = {});

}  // namespace thinfilm
