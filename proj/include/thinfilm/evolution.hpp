#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "thinfilm/field.hpp"
#include "thinfilm/model.hpp"

namespace thinfilm {

// Controls for the adaptive semi-implicit stepper.
struct StepControls {
    double epsilon = 1e-11;       // step-doubling error target (L_inf)
    double dt_init = 1e-6;
    double dt_min = 1e-14;
    double dt_max = 1e-1;
    double t_max = 100.0;
    int n_max = 8192;             // finest mesh the resolution monitor may request
    double blowup_threshold = 0.0;    // absolute h_max stop; <= 0 selects 1e3 * initial h_max
    double touchdown_report = 1e-6;   // h_min level used when reporting touch-down
    double fixed_dt = 0.0;            // > 0 disables adaptivity and steps at this dt
    double tail_fraction = 0.1;       // resolution monitor: fraction of spectrum inspected
    double roundoff_level = 1e-11;    // resolution monitor: relative roundoff floor
    int snapshot_every = 0;           // accepted steps between stored snapshots; 0 stores none
    long max_steps = 0;               // accepted-step budget; 0 means unbounded

    void validate() const;
};

// Lagging state for the two-level scheme. previous/prev_dt feed the midpoint
// extrapolation of the variable coefficients.
struct EvolutionState {
    PeriodicField current;
    PeriodicField previous;
    double t = 0.0;
    double dt = 0.0;
    double prev_dt = 0.0;
    long step_index = 0;
};

// One Crank-Nicolson step of size dt from `current`, with coefficients frozen at the
// linear extrapolation of (current, previous) to t + dt/2. previous == current gives
// the first-step (no slope) variant. Conserves the mean exactly by construction.
PeriodicField cn_step(const PeriodicField& current, const PeriodicField& previous,
                      double prev_dt, double dt, const ModelParams& params);

struct AdaptiveStepInfo {
    double error = 0.0;       // accepted step-doubling error
    int halvings = 0;
    int doublings = 0;
    bool accepted_at_cap = false;  // error < epsilon/10 but dt_max reached
};

// Advances state by one accepted step, halving on error > epsilon and retrying with a
// doubled step on error < epsilon/10. Accepts the two-half-step solution. Throws
// numeric_error if dt collapses below dt_min.
AdaptiveStepInfo adaptive_step(EvolutionState& state, const ModelParams& params, const StepControls& controls);

enum class OutcomeKind {
    TouchDown,
    BlowUp,
    RelaxedToConstant,
    RelaxedToPeriodic,
    HorizonReached,
    ResolutionExhausted,
};

const char* to_string(OutcomeKind kind);

struct Outcome {
    OutcomeKind kind = OutcomeKind::HorizonReached;
    double t_stop = 0.0;
    double t_last_resolved = 0.0;
    // RelaxedToConstant: the constant. RelaxedToPeriodic: the aligning shift.
    double value = 0.0;
    std::vector<double> locations;  // touch-down positions from the last resolved profile
    std::string detail;
};

struct SeriesRow {
    double t = 0.0;
    double dt = 0.0;
    double hmin = 0.0;
    double hmax = 0.0;
    double mass = 0.0;
    double energy = 0.0;
    bool resolved = true;
};

struct Snapshot {
    double t = 0.0;
    long step = 0;
    PeriodicField field;
};

struct RunRecord {
    std::vector<SeriesRow> series;
    std::vector<Snapshot> snapshots;
    PeriodicField final_state;
    PeriodicField last_resolved;
    double t_last_resolved = 0.0;
    Outcome outcome;
    std::vector<std::pair<double, int>> mesh_history;  // (t, N) at start and at each doubling
    ModelParams params{};
    StepControls controls{};   // after default materialization (blow-up threshold resolved)
    double wall_time_s = 0.0;
};

// Optional diagnostics evaluated on each accepted state.
struct RunProbes {
    std::function<double(const PeriodicField&)> energy;  // logged as NaN when absent
};

// Full run: adaptive (or fixed-dt) stepping, per-step series row, resolution
// monitoring with rollback-and-refine mesh doubling up to n_max, and stop detection
// (touch-down, blow-up, horizon, step budget, unresolvable spectrum).
RunRecord evolve_run(const PeriodicField& initial, const ModelParams& params,
                     const StepControls& controls, const RunProbes& probes = {});

// Touch-down positions read from a profile: x locations of the local minima that reach
// max(report_level, 10 * profile minimum); the global minimum location if none qualify.
std::vector<double> touchdown_locations(const PeriodicField& f, double report_level);

}  // namespace thinfilm
