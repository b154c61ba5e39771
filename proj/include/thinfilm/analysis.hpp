#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "thinfilm/evolution.hpp"
#include "thinfilm/field.hpp"
#include "thinfilm/model.hpp"

namespace thinfilm {

// Parameters of the free energy E[h] = integral( h_x^2/2 - H(h) ) dx, where the
// potential satisfies H''(y) = B y^{q-1}. The evolution is a gradient flow for E, so E
// decreases along solutions. H is fixed up to an affine term, which is invariant under
// the flow (mass is conserved); the branch cuts below pick one antiderivative.
struct EnergyParams {
    double q = 1.0;
    double bond = 1.0;

    // H(y) = B y^{q+1}/(q(q+1)); B (y ln y - y) at q = 0; -B ln y at q = -1. y > 0.
    double potential(double y) const;

    static EnergyParams from_model(const ModelParams& p) { return {p.q(), p.bond}; }
};

// Discrete free energy dx * sum_i [ ((h_{i+1} - h_i)/dx)^2 / 2 - H(h_i) ] with periodic
// wrap. Requires a strictly positive field.
double free_energy(const PeriodicField& h, const EnergyParams& p);

// Continuous linearized growth rate about the constant state:
// sigma(k) = hbar^n k^2 (B hbar^{q-1} - k^2).
double growth_rate(double k, double hbar, const ModelParams& params);

// Per-step amplification factor of mode k under the frozen-coefficient implicit
// midpoint step on the constant state: (1 - mu)/(1 + mu) with
// mu = (dt/2) hbar^n k^2 (k^2 - B hbar^{q-1}). dx > 0 replaces k^2 by the
// centered-difference symbol 4 sin^2(k dx/2)/dx^2, which is what the mesh scheme
// realizes exactly.
double growth_factor(double k, double dt, double hbar, const ModelParams& params, double dx = 0.0);

enum class BifurcationType { Supercritical, Subcritical, Degenerate };

struct LandauResult {
    double kappa = 0.0;
    BifurcationType type = BifurcationType::Degenerate;
    // Equilibrium amplitude sqrt(sigma/kappa) when that ratio is positive: the stable
    // saturation level for kappa > 0, the finite-amplitude instability threshold for
    // kappa < 0 (sigma < 0). NaN when no finite equilibrium exists.
    double amplitude = 0.0;
};

// Weakly nonlinear coefficient of the near-threshold amplitude equation
// a' = sigma a - kappa a^3: kappa = (sigma/6)(q - 1)(7/4 - q).
LandauResult landau(double q, double sigma);

enum class ConstantStability { LocalMinimum, Saddle, Marginal };

// Energy character of the constant state on a domain of length X: a saddle exactly when
// the first cosine mode is linearly unstable, i.e. B hbar^{q-1} X^2 > 4 pi^2.
ConstantStability constant_state_stability(double hbar, double X, const ModelParams& params);

// Singularity time for v(t) = C (t_c - t)^p from two samples:
// t_c = (t1 - rho t2)/(1 - rho) with rho = (v1/v2)^{1/p}. Requires t1 < t2 and positive
// values; rho == 1 (no drift between samples) is a numeric_error.
double estimate_singularity_time(double t1, double v1, double t2, double v2, double p);

struct PowerLawFit {
    double prefactor = 0.0;
    double exponent = 0.0;
};

// Log-log least squares for v = C u^p through positive samples (u, v); needs >= 2
// distinct u values.
PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& samples);

// Number of plateau-aware strict local minima with value < threshold.
int count_local_minima_below(const PeriodicField& f, double threshold);

// First time at which the h_min series crosses `level`, linearly interpolated between
// logged rows; NaN when it never does.
double half_time(const RunRecord& record, double level);

struct ClassifyReferences {
    std::optional<double> hbar;           // expected limit constant; defaults to mass/X
    std::optional<PeriodicField> steady;  // candidate periodic limit profile
};

// Refine a run's raw outcome: horizon/exhaustion runs whose last resolved state sits
// within tol (L_inf) of the constant become RelaxedToConstant; within tol of the steady
// reference modulo translation become RelaxedToPeriodic (value = aligning shift);
// monotone h_min collapse below the reporting level upgrades to TouchDown, and the
// mirrored h_max growth toward the blow-up threshold upgrades to BlowUp.
Outcome classify_outcome(const RunRecord& record, const ClassifyReferences& refs = {}, double tol = 1e-6);

enum class BranchStability { Stable, Unstable, Neutral };

struct BranchPoint {
    double alpha = 0.0;
    double energy = 0.0;     // E(alpha), scale invariant
    double amplitude = 0.0;  // physical (peak - trough)/2 at the given bond and period
    BranchStability stability = BranchStability::Neutral;
};

// Steady-state branch over a grid of alpha values at fixed bond and domain period.
// Stability labels: unstable for q < 1, neutral at q = 1, stable on 1 < q <= 7/4,
// unstable for q >= q_upper; in the fold window (7/4, q_upper) the label follows the
// sign of dE/dalpha (negative slope = stable), so the alphas must be strictly
// increasing and at least two.
std::vector<BranchPoint> bifurcation_branch(double q, double bond, double target_period,
                                            const std::vector<double>& alphas, double q_upper = 1.794);

}  // namespace thinfilm
