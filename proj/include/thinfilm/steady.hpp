#pragma once

#include <vector>

#include "thinfilm/field.hpp"
#include "thinfilm/model.hpp"

namespace thinfilm {

// One period of the canonical oscillator k'' + (k^q - 1)/q = 0 (k'' + log k = 0 at q=0)
// started from k(0) = alpha in (0,1), k'(0) = 0, so the profile minimum sits at x = 0.
struct CanonicalSteadyState {
    double q = 0.0;
    double alpha = 0.0;
    double period = 0.0;  // P(alpha)
    double area = 0.0;    // A(alpha), integral of k over one period
    double energy = 0.0;  // E(alpha) = P^{3-q} A^{q-1}, invariant under rescaling
    double peak = 0.0;    // k at the turning point (profile maximum)
    PeriodicField profile;  // samples over [0, P), empty when samples == 0
};

// Integrate the canonical oscillator to its first turning point (bounded to x <= 100),
// then sample one period on `samples` mesh points (0 skips sampling; otherwise a power
// of two >= 8). alpha = 0 is allowed for q > 0 (zero contact angle limit).
CanonicalSteadyState solve_canonical(double q, double alpha, double tol = 1e-12, int samples = 1024);

// A steady state of the physical equation h'' + (B h^q - D)/q = 0 with the given period.
struct RescaledSteadyState {
    double q = 0.0;
    double alpha = 0.0;
    double bond = 0.0;              // B
    double d_const = 0.0;           // D
    double period = 0.0;            // physical period (target)
    double area = 0.0;              // physical area over one period
    double canonical_period = 0.0;  // P(alpha)
    double energy = 0.0;            // E(alpha); equals B * period^{3-q} * area^{q-1}
    PeriodicField profile;
};

// Fix D = 1: B = (P/target)^{2q}, h = B^{-1/q} k(x P/target). Requires q != 0.
RescaledSteadyState scale_to_period(const CanonicalSteadyState& c, double target_period);

// Fix B: h = c k(s x) with s = P/target, c = (s^2/B)^{1/(q-1)}, D = c s^2.
// Requires q != 0 and q != 1.
RescaledSteadyState scale_with_bond(const CanonicalSteadyState& c, double bond, double target_period);

// A root of the discrete steady equation
//   h[i+2] - 3h[i+1] + 3h[i] - h[i-1] + dx^2 * avg(r(h[i+1]), r(h[i])) * (h[i+1] - h[i]) = 0
// (periodic indices). These profiles are exact fixed points of the evolution scheme.
struct FDSteadyState {
    ModelParams params;
    PeriodicField profile;
    double residual = 0.0;  // max |row residual| at convergence
    int iterations = 0;
};

// Row residuals of the discrete steady equation (size N).
std::vector<double> fd_residual(const PeriodicField& h, const ModelParams& params);

// Newton-Raphson from an analytic seed. The Jacobian has a two-dimensional near-null
// space (translation plus the first-integral constant of the steady family); each step
// solves a bordered least-squares system whose two extra rows pin the step's mean and
// its translation component, deflating both null directions explicitly. The seed's
// mean is pinned throughout.
FDSteadyState fd_steady_state(const PeriodicField& seed, const ModelParams& params,
                              double target_residual = 1e-14, int max_iterations = 40);

// For q = 1 the discrete equation is linear: a + b cos(sqrt(B) x) solves it exactly when
// the Bond number is replaced by Btilde = 2(1 - cos(sqrt(B) dx))/dx^2 = B - O(dx^2).
double q1_fd_bond(double bond, double dx);

// E0(q) = lim_{alpha->0} E(alpha): the energy invariant of the zero-contact-angle droplet.
// Geometric-node extrapolation from alpha = 1e-2, 1e-3, 1e-4 (extended downward until the
// estimate is stable to rel_tol). Requires -1 < q < 3.
double compute_E0(double q, double rel_tol = 1e-4);

// Period of a single steady droplet of the given area at Bond number B:
// P = (E0(q) A^{1-q} / B)^{1/(3-q)}. The overload takes a precomputed E0.
double droplet_length(double q, double bond, double area);
double droplet_length(double q, double bond, double area, double E0);

// Total length of two droplets splitting the area as (lambda, 1-lambda).
double two_droplet_length(double q, double bond, double area, double lambda);
double two_droplet_length(double q, double bond, double area, double lambda, double E0);

// The second steady state with the same energy: given alpha1 on one monotone branch of
// E(alpha), find alpha2 on the other branch with E(alpha2) = E(alpha1). Quintic
// interpolation through six bracketing nodes, Newton on the interpolant, then a secant
// polish on the true E. Meaningful in the non-monotone regime (1.75 < q < q_upper).
struct MatchingAlphaResult {
    double alpha2 = 0.0;
    double energy = 0.0;  // common E
    CanonicalSteadyState state1, state2;
};

MatchingAlphaResult find_matching_alpha(double q, double alpha1, double tol = 1e-12);

}  // namespace thinfilm
