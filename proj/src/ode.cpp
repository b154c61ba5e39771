#include "thinfilm/ode.hpp"

#include <algorithm>
#include <cmath>

#include "thinfilm/model.hpp"

namespace thinfilm::detail {

namespace {

// Dormand-Prince 5(4) tableau (FSAL: stage 7 is the derivative at the accepted endpoint).
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695, e4 = b4 - 393.0 / 640,
                 e5 = b5 + 92097.0 / 339200, e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

Vec3 axpy(const Vec3& y, double h, const Vec3& d) {
    return {y[0] + h * d[0], y[1] + h * d[1], y[2] + h * d[2]};
}

}  // namespace

void Dp54::step(double& x, Vec3& y, double& h, const Vec3& f0, Vec3& f1, double h_cap) const {
    Vec3 k2, k3, k4, k5, k6;
    while (true) {
        if (h < opt_.h_min) throw numeric_error("ode: step size collapsed below h_min");
        Vec3 t;
        t = axpy(y, h * a21, f0);
        rhs_(x + c2 * h, t, k2);
        t = {y[0] + h * (a31 * f0[0] + a32 * k2[0]), y[1] + h * (a31 * f0[1] + a32 * k2[1]),
             y[2] + h * (a31 * f0[2] + a32 * k2[2])};
        rhs_(x + c3 * h, t, k3);
        t = {y[0] + h * (a41 * f0[0] + a42 * k2[0] + a43 * k3[0]),
             y[1] + h * (a41 * f0[1] + a42 * k2[1] + a43 * k3[1]),
             y[2] + h * (a41 * f0[2] + a42 * k2[2] + a43 * k3[2])};
        rhs_(x + c4 * h, t, k4);
        t = {y[0] + h * (a51 * f0[0] + a52 * k2[0] + a53 * k3[0] + a54 * k4[0]),
             y[1] + h * (a51 * f0[1] + a52 * k2[1] + a53 * k3[1] + a54 * k4[1]),
             y[2] + h * (a51 * f0[2] + a52 * k2[2] + a53 * k3[2] + a54 * k4[2])};
        rhs_(x + c5 * h, t, k5);
        t = {y[0] + h * (a61 * f0[0] + a62 * k2[0] + a63 * k3[0] + a64 * k4[0] + a65 * k5[0]),
             y[1] + h * (a61 * f0[1] + a62 * k2[1] + a63 * k3[1] + a64 * k4[1] + a65 * k5[1]),
             y[2] + h * (a61 * f0[2] + a62 * k2[2] + a63 * k3[2] + a64 * k4[2] + a65 * k5[2])};
        rhs_(x + h, t, k6);
        Vec3 y5 = {y[0] + h * (b1 * f0[0] + b3 * k3[0] + b4 * k4[0] + b5 * k5[0] + b6 * k6[0]),
                   y[1] + h * (b1 * f0[1] + b3 * k3[1] + b4 * k4[1] + b5 * k5[1] + b6 * k6[1]),
                   y[2] + h * (b1 * f0[2] + b3 * k3[2] + b4 * k4[2] + b5 * k5[2] + b6 * k6[2])};
        rhs_(x + h, y5, f1);
        double err = 0.0;
        for (int i = 0; i < 3; ++i) {
            double diff = h * (e1 * f0[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * f1[i]);
            double scale = opt_.tol * (1.0 + std::max(std::fabs(y[i]), std::fabs(y5[i])));
            err = std::max(err, std::fabs(diff) / scale);
        }
        if (err <= 1.0) {
            x += h;
            y = y5;
            double grow = (err == 0.0) ? 5.0 : 0.9 * std::pow(err, -0.2);
            h *= std::clamp(grow, 0.2, 5.0);
            h = std::min(h, h_cap);
            return;
        }
        h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.5);
    }
}

void Dp54::integrate_to(double& x, Vec3& y, double x_target) const {
    if (x_target < x) throw std::invalid_argument("ode: integrate_to goes backward");
    double h = std::min(opt_.h_init, x_target - x);
    Vec3 f0, f1;
    rhs_(x, y, f0);
    while (x < x_target) {
        double remaining = x_target - x;
        if (remaining <= 1e-16 * std::max(1.0, std::fabs(x))) break;
        double trial = std::min(h, remaining);
        step(x, y, trial, f0, f1, remaining);
        h = trial;
        f0 = f1;
    }
    x = x_target;
}

double Dp54::integrate_to_turning_point(double& x, Vec3& y, double x_cap) const {
    double h = opt_.h_init;
    Vec3 f0, f1;
    rhs_(x, y, f0);
    while (x < x_cap) {
        double x0 = x;
        Vec3 y0 = y, d0 = f0;
        step(x, y, h, f0, f1, x_cap - x0);
        if (y0[1] > 0.0 && y[1] <= 0.0) {
            // Bisection for the root of the cubic Hermite interpolant of k' on [x0, x].
            double hs = x - x0;
            auto hermite = [&](double th) {
                double h00 = (1 + 2 * th) * (1 - th) * (1 - th);
                double h10 = th * (1 - th) * (1 - th);
                double h01 = th * th * (3 - 2 * th);
                double h11 = th * th * (th - 1);
                return h00 * y0[1] + h10 * hs * d0[1] + h01 * y[1] + h11 * hs * f1[1];
            };
            double lo = 0.0, hi = 1.0;
            for (int it = 0; it < 80; ++it) {
                double mid = 0.5 * (lo + hi);
                (hermite(mid) > 0.0 ? lo : hi) = mid;
            }
            double xev = x0 + 0.5 * (lo + hi) * hs;
            // Newton polish with exact re-integration from the bracket start.
            for (int it = 0; it < 3; ++it) {
                double xi = x0;
                Vec3 yi = y0;
                integrate_to(xi, yi, xev);
                Vec3 fi;
                rhs_(xi, yi, fi);
                if (fi[1] == 0.0) break;
                double correction = yi[1] / fi[1];
                double next = xev - correction;
                if (!(next > x0 && next < x0 + 2.0 * hs)) break;  // keep inside the bracket region
                xev = next;
                if (std::fabs(correction) < 1e-15 * std::max(1.0, xev)) break;
            }
            x = x0;
            y = y0;
            integrate_to(x, y, xev);
            return xev;
        }
        f0 = f1;
    }
    throw numeric_error("ode: no turning point found before x_cap");
}

}  // namespace thinfilm::detail
