#pragma once

#include <array>
#include <functional>

namespace thinfilm::detail {

// State for the canonical profile integration: y = (k, k', area).
using Vec3 = std::array<double, 3>;
using Rhs3 = std::function<void(double, const Vec3&, Vec3&)>;

struct OdeOptions {
    double tol = 1e-12;    // mixed abs/rel tolerance per component
    double h_init = 1e-3;  // first trial step
    double h_min = 1e-15;  // below this the step controller gives up
};

// Adaptive Dormand-Prince 5(4) embedded pair.
class Dp54 {
public:
    Dp54(Rhs3 rhs, OdeOptions opt) : rhs_(std::move(rhs)), opt_(opt) {}

    // Advance (x, y) to exactly x_target (forward only).
    void integrate_to(double& x, Vec3& y, double x_target) const;

    // Advance until y[1] crosses zero from strictly positive to <= 0, starting from a
    // state with y[1] == 0 but rising. Returns the crossing location (bisection on the
    // cubic Hermite interpolant, then Newton polish with exact re-integration); on return
    // (x, y) sit at the crossing. Throws numeric_error if no crossing before x_cap.
    double integrate_to_turning_point(double& x, Vec3& y, double x_cap) const;

private:
    Rhs3 rhs_;
    OdeOptions opt_;

    // One accepted adaptive step from (x, y); h is the trial size on entry and the next
    // trial size on exit. f0 = rhs(x, y) on entry; f1 = rhs at the accepted endpoint.
    void step(double& x, Vec3& y, double& h, const Vec3& f0, Vec3& f1, double h_cap) const;
};

}  // namespace thinfilm::detail
