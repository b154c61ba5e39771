#pragma once

#include <cmath>
#include <stdexcept>

namespace thinfilm {

// Numeric failure inside a solver (Newton stall, singular matrix, step collapse, ...).
// Precondition violations throw std::invalid_argument instead.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// y^p with a fast path for small integer exponents (hot loops call this with p = n, m-n).
inline double pow_real(double y, double p) {
    double r = std::rint(p);
    if (r == p && std::fabs(r) <= 8.0) {
        double a = 1.0, b = (r < 0) ? 1.0 / y : y;
        int e = static_cast<int>(std::fabs(r));
        while (e > 0) {
            if (e & 1) a *= b;
            b *= b;
            e >>= 1;
        }
        return a;
    }
    return std::pow(y, p);
}

// Parameters of h_t = -(h^n h_xxx)_x - B (h^m h_x)_x on a periodic domain.
// The single exponent q = m - n + 1 controls the steady-state family and the
// sub/supercritical character; n only sets the mobility time scale.
struct ModelParams {
    double n = 1.0;     // mobility exponent: f(y) = y^n
    double m = 1.0;     // second-order exponent: g(y) = B y^m
    double bond = 1.0;  // Bond number B >= 0

    double q() const { return m - n + 1.0; }

    // f(y) = y^n
    double mobility(double y) const { return pow_real(y, n); }

    // r(y) = g(y)/f(y) = B y^{m-n} = B y^{q-1}
    double ratio(double y) const { return bond * pow_real(y, m - n); }

    void validate() const {
        if (!(bond >= 0.0)) throw std::invalid_argument("ModelParams: bond must be >= 0");
        if (!std::isfinite(n) || !std::isfinite(m)) throw std::invalid_argument("ModelParams: exponents must be finite");
    }
};

}  // namespace thinfilm
