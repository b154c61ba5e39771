#include "thinfilm/steady.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "thinfilm/ode.hpp"

namespace thinfilm {

namespace {

constexpr double kTurningPointCap = 100.0;  // search bound for the first turning point

detail::Rhs3 canonical_rhs(double q) {
    if (q == 0.0) {
        return [](double, const detail::Vec3& y, detail::Vec3& d) {
            d[0] = y[1];
            d[1] = -std::log(y[0]);
            d[2] = y[0];
        };
    }
    return [q](double, const detail::Vec3& y, detail::Vec3& d) {
        // max(k, 0) guards RK stage undershoot at the alpha = 0 start
        double k = std::max(y[0], 0.0);
        d[0] = y[1];
        d[1] = -(pow_real(k, q) - 1.0) / q;
        d[2] = y[0];
    };
}

// Dense Gaussian elimination with partial pivoting for small systems (quintic fits).
std::vector<double> solve_dense(std::vector<double> A, std::vector<double> b) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(A[static_cast<size_t>(r * n + col)]) > std::fabs(A[static_cast<size_t>(piv * n + col)]))
                piv = r;
        if (A[static_cast<size_t>(piv * n + col)] == 0.0) throw numeric_error("solve_dense: singular matrix");
        if (piv != col) {
            for (int c = 0; c < n; ++c) std::swap(A[static_cast<size_t>(col * n + c)], A[static_cast<size_t>(piv * n + c)]);
            std::swap(b[static_cast<size_t>(col)], b[static_cast<size_t>(piv)]);
        }
        for (int r = col + 1; r < n; ++r) {
            double fct = A[static_cast<size_t>(r * n + col)] / A[static_cast<size_t>(col * n + col)];
            if (fct == 0.0) continue;
            for (int c = col; c < n; ++c) A[static_cast<size_t>(r * n + c)] -= fct * A[static_cast<size_t>(col * n + c)];
            b[static_cast<size_t>(r)] -= fct * b[static_cast<size_t>(col)];
        }
    }
    std::vector<double> x(static_cast<size_t>(n));
    for (int r = n - 1; r >= 0; --r) {
        double s = b[static_cast<size_t>(r)];
        for (int c = r + 1; c < n; ++c) s -= A[static_cast<size_t>(r * n + c)] * x[static_cast<size_t>(c)];
        x[static_cast<size_t>(r)] = s / A[static_cast<size_t>(r * n + r)];
    }
    return x;
}

double mean_of(const PeriodicField& f) {
    double s = 0.0;
    for (double v : f.values) s += v;
    return s / f.size();
}

}  // namespace

CanonicalSteadyState solve_canonical(double q, double alpha, double tol, int samples) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("solve_canonical: alpha must be in [0,1)");
    if (alpha == 0.0 && !(q > 0.0))
        throw std::invalid_argument("solve_canonical: alpha = 0 needs q > 0 (k^q singular at k = 0 otherwise)");
    if (!(tol > 0.0)) throw std::invalid_argument("solve_canonical: tol must be positive");
    if (samples != 0 && (samples < 8 || !is_power_of_two(samples)))
        throw std::invalid_argument("solve_canonical: samples must be 0 or a power of two >= 8");

    detail::OdeOptions opt;
    opt.tol = tol;
    detail::Dp54 ode(canonical_rhs(q), opt);

    double x = 0.0;
    detail::Vec3 y = {alpha, 0.0, 0.0};
    double x_turn = ode.integrate_to_turning_point(x, y, kTurningPointCap);

    CanonicalSteadyState s;
    s.q = q;
    s.alpha = alpha;
    s.period = 2.0 * x_turn;          // profile is even about the turning point
    s.area = 2.0 * y[2];              // integral of k over [0, P/2], doubled
    s.peak = y[0];
    s.energy = pow_real(s.period, 3.0 - q) * pow_real(s.area, q - 1.0);

    if (samples > 0) {
        const int N = samples;
        s.profile.X = s.period;
        s.profile.values.assign(static_cast<size_t>(N), 0.0);
        double xi = 0.0;
        detail::Vec3 yi = {alpha, 0.0, 0.0};
        s.profile.values[0] = alpha;
        for (int j = 1; j <= N / 2; ++j) {
            ode.integrate_to(xi, yi, s.period * j / N);
            s.profile.values[static_cast<size_t>(j)] = yi[0];
        }
        for (int j = N / 2 + 1; j < N; ++j)  // mirror: k(P - x) = k(x)
            s.profile.values[static_cast<size_t>(j)] = s.profile.values[static_cast<size_t>(N - j)];
    }
    return s;
}

RescaledSteadyState scale_to_period(const CanonicalSteadyState& c, double target_period) {
    if (c.q == 0.0) throw std::invalid_argument("scale_to_period: q = 0 has no power-law rescaling");
    if (!(target_period > 0.0)) throw std::invalid_argument("scale_to_period: target period must be positive");
    const double s = c.period / target_period;
    RescaledSteadyState r;
    r.q = c.q;
    r.alpha = c.alpha;
    r.bond = pow_real(s, 2.0 * c.q);
    r.d_const = 1.0;
    const double amp = 1.0 / (s * s);  // B^{-1/q} expressed exactly
    r.period = target_period;
    r.canonical_period = c.period;
    r.area = amp * c.area / s;
    r.energy = c.energy;
    r.profile.X = target_period;
    r.profile.values.resize(c.profile.values.size());
    for (size_t j = 0; j < c.profile.values.size(); ++j) r.profile.values[j] = amp * c.profile.values[j];
    return r;
}

RescaledSteadyState scale_with_bond(const CanonicalSteadyState& c, double bond, double target_period) {
    if (c.q == 0.0 || c.q == 1.0)
        throw std::invalid_argument("scale_with_bond: needs q != 0 and q != 1 (amplitude scaling degenerates)");
    if (!(bond > 0.0) || !(target_period > 0.0))
        throw std::invalid_argument("scale_with_bond: bond and target period must be positive");
    const double s = c.period / target_period;
    const double amp = std::pow(s * s / bond, 1.0 / (c.q - 1.0));
    RescaledSteadyState r;
    r.q = c.q;
    r.alpha = c.alpha;
    r.bond = bond;
    r.d_const = amp * s * s;
    r.period = target_period;
    r.canonical_period = c.period;
    r.area = amp * c.area / s;
    r.energy = c.energy;
    r.profile.X = target_period;
    r.profile.values.resize(c.profile.values.size());
    for (size_t j = 0; j < c.profile.values.size(); ++j) r.profile.values[j] = amp * c.profile.values[j];
    return r;
}

std::vector<double> fd_residual(const PeriodicField& h, const ModelParams& params) {
    const int N = h.size();
    const double dx2 = h.dx() * h.dx();
    std::vector<double> r(static_cast<size_t>(N)), res(static_cast<size_t>(N));
    for (int j = 0; j < N; ++j) r[static_cast<size_t>(j)] = params.ratio(h.values[static_cast<size_t>(j)]);
    auto wrap = [N](int j) { return ((j % N) + N) % N; };
    for (int i = 0; i < N; ++i) {
        double hm1 = h.values[static_cast<size_t>(wrap(i - 1))];
        double h0 = h.values[static_cast<size_t>(i)];
        double hp1 = h.values[static_cast<size_t>(wrap(i + 1))];
        double hp2 = h.values[static_cast<size_t>(wrap(i + 2))];
        double ravg = 0.5 * (r[static_cast<size_t>(wrap(i + 1))] + r[static_cast<size_t>(i)]);
        res[static_cast<size_t>(i)] = hp2 - 3.0 * hp1 + 3.0 * h0 - hm1 + dx2 * ravg * (hp1 - h0);
    }
    return res;
}

FDSteadyState fd_steady_state(const PeriodicField& seed, const ModelParams& params, double target_residual,
                              int max_iterations) {
    params.validate();
    const int N = seed.size();
    if (N > 4096) throw std::invalid_argument("fd_steady_state: dense SVD capped at N = 4096");
    if (seed.min() <= 0.0) throw std::invalid_argument("fd_steady_state: seed must be strictly positive");
    const double dx2 = seed.dx() * seed.dx();
    const double mean0 = mean_of(seed);
    const double dr_exp = params.m - params.n;  // r(y) = B y^{q-1}, q-1 = m-n

    PeriodicField h = seed;
    auto wrap = [N](int j) { return ((j % N) + N) % N; };

    auto max_abs = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::fabs(x));
        return m;
    };

    // Bordered least-squares system: N residual rows plus two constraint rows.
    // The steady family is two-dimensional (translation and the first-integral
    // constant), so the Jacobian carries two near-null directions. Pinning the
    // step's mean and its component along the translation tangent lifts both,
    // leaving dgelsd's rcond cutoff to guard genuine degeneracy only. A fixed
    // relative cutoff cannot separate the nulls from the physical k = 1 mode on
    // fine meshes, where that mode's singular value scales like dx^4.
    const int M = N + 2;
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(N));
    std::vector<double> A(static_cast<size_t>(M) * N), b(static_cast<size_t>(M)), sv(static_cast<size_t>(N));
    std::vector<double> res = fd_residual(h, params);
    double best = max_abs(res);
    PeriodicField best_h = h;
    int iterations = 0;

    if (best < target_residual) {  // seed is already a discrete steady state
        FDSteadyState out;
        out.params = params;
        out.profile = h;
        out.residual = best;
        out.iterations = 0;
        return out;
    }

    for (int it = 0; it < max_iterations; ++it) {
        double cur = max_abs(res);
        // one polish pass after crossing the target, keeping the better iterate
        if (cur < target_residual && iterations > 0) break;

        std::fill(A.begin(), A.end(), 0.0);
        auto Jat = [&](int row, int col) -> double& { return A[static_cast<size_t>(col) * M + row]; };
        double tangent_norm = 0.0;
        for (int i = 0; i < N; ++i) {
            double hm1 = h.values[static_cast<size_t>(wrap(i - 1))];
            double h0 = h.values[static_cast<size_t>(i)];
            double hp1 = h.values[static_cast<size_t>(wrap(i + 1))];
            double r0 = params.ratio(h0), r1 = params.ratio(hp1);
            double dr0 = params.bond * dr_exp * pow_real(h0, dr_exp - 1.0);
            double dr1 = params.bond * dr_exp * pow_real(hp1, dr_exp - 1.0);
            double diff = hp1 - h0;
            Jat(i, wrap(i - 1)) += -1.0;
            Jat(i, i) += 3.0 + dx2 * (0.5 * dr0 * diff - 0.5 * (r0 + r1));
            Jat(i, wrap(i + 1)) += -3.0 + dx2 * (0.5 * dr1 * diff + 0.5 * (r0 + r1));
            Jat(i, wrap(i + 2)) += 1.0;
            Jat(N, i) = inv_sqrt_n;            // constraint row: mean(delta) = 0
            Jat(N + 1, i) = 0.5 * (hp1 - hm1);  // translation tangent, normalized below
            tangent_norm += Jat(N + 1, i) * Jat(N + 1, i);
            b[static_cast<size_t>(i)] = -res[static_cast<size_t>(i)];
        }
        tangent_norm = std::sqrt(tangent_norm);
        if (tangent_norm > 0.0)
            for (int i = 0; i < N; ++i) Jat(N + 1, i) /= tangent_norm;
        b[static_cast<size_t>(N)] = 0.0;
        b[static_cast<size_t>(N + 1)] = 0.0;

        lapack_int rank = 0;
        lapack_int info = LAPACKE_dgelsd(LAPACK_COL_MAJOR, M, N, 1, A.data(), M, b.data(), M, sv.data(),
                                         1e-11, &rank);
        if (info != 0) throw numeric_error("fd_steady_state: least-squares solve failed");
        if (rank < N)
            throw numeric_error("fd_steady_state: Jacobian is rank deficient beyond the steady family's null directions");

        for (int i = 0; i < N; ++i) h.values[static_cast<size_t>(i)] += b[static_cast<size_t>(i)];
        double shift = mean0 - mean_of(h);  // exact re-pin; the solve keeps this tiny
        for (double& v : h.values) v += shift;
        ++iterations;

        if (h.min() <= 0.0) throw numeric_error("fd_steady_state: Newton iterate left the positive cone");
        res = fd_residual(h, params);
        double now = max_abs(res);
        if (now < best) {
            best = now;
            best_h = h;
        }
        if (cur < target_residual) break;  // that was the polish pass
    }

    if (best > target_residual) throw numeric_error("fd_steady_state: Newton did not reach the target residual");
    FDSteadyState out;
    out.params = params;
    out.profile = best_h;
    out.residual = best;
    out.iterations = iterations;
    return out;
}

double q1_fd_bond(double bond, double dx) {
    if (!(bond >= 0.0) || !(dx > 0.0)) throw std::invalid_argument("q1_fd_bond: needs bond >= 0, dx > 0");
    return 2.0 * (1.0 - std::cos(std::sqrt(bond) * dx)) / (dx * dx);
}

double compute_E0(double q, double rel_tol) {
    if (!(q > -1.0 && q < 3.0)) throw std::invalid_argument("compute_E0: requires -1 < q < 3");
    auto E = [q](double alpha) { return solve_canonical(q, alpha, 1e-12, 0).energy; };

    // Geometric nodes alpha = 10^{-2}, 10^{-3}, ...; Aitken delta-squared is exact for any
    // power-law tail E(alpha) - E0 ~ C alpha^p on such nodes.
    std::vector<double> e = {E(1e-2), E(1e-3), E(1e-4)};
    auto aitken = [&]() {
        size_t n = e.size();
        double d1 = e[n - 1] - e[n - 2], d2 = e[n - 2] - e[n - 3];
        double denom = d1 - d2;
        if (denom == 0.0) return e[n - 1];
        return e[n - 1] - d1 * d1 / denom;
    };
    double prev = aitken();
    double node = 1e-5;
    for (int extra = 0; extra < 3; ++extra, node *= 0.1) {
        e.push_back(E(node));
        double cur = aitken();
        if (std::fabs(cur - prev) <= rel_tol * std::fabs(cur)) return cur;
        prev = cur;
    }
    return prev;
}

double droplet_length(double q, double bond, double area, double E0) {
    if (!(q > -1.0 && q < 3.0)) throw std::invalid_argument("droplet_length: requires -1 < q < 3");
    if (!(bond > 0.0) || !(area > 0.0)) throw std::invalid_argument("droplet_length: bond and area must be positive");
    return std::pow(E0 * std::pow(area, 1.0 - q) / bond, 1.0 / (3.0 - q));
}

double droplet_length(double q, double bond, double area) {
    return droplet_length(q, bond, area, compute_E0(q));
}

double two_droplet_length(double q, double bond, double area, double lambda, double E0) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("two_droplet_length: lambda must be in (0,1)");
    return droplet_length(q, bond, lambda * area, E0) + droplet_length(q, bond, (1.0 - lambda) * area, E0);
}

double two_droplet_length(double q, double bond, double area, double lambda) {
    return two_droplet_length(q, bond, area, lambda, compute_E0(q));
}

MatchingAlphaResult find_matching_alpha(double q, double alpha1, double tol) {
    if (!(alpha1 > 0.0 && alpha1 < 1.0)) throw std::invalid_argument("find_matching_alpha: alpha1 must be in (0,1)");
    auto E = [&](double a) { return solve_canonical(q, a, tol, 0).energy; };
    const double E1 = E(alpha1);

    // Coarse scan to locate the interior minimum of E(alpha).
    std::vector<double> grid, eg;
    for (double a = 0.02; a < 0.985; a += 0.02) {
        grid.push_back(a);
        eg.push_back(E(a));
    }
    size_t imin = static_cast<size_t>(std::min_element(eg.begin(), eg.end()) - eg.begin());
    double astar = grid[imin];

    // Walk the branch on the far side of the minimum until E - E1 changes sign.
    const bool search_up = alpha1 < astar;
    double lo = 0.0, hi = 0.0;
    {
        double prev_a = astar, prev_g = eg[imin] - E1;
        if (prev_g > 0.0) throw numeric_error("find_matching_alpha: E(alpha1) lies below the branch minimum");
        const double step = 0.005, limit_hi = 0.9995, limit_lo = 1e-4;
        for (double a = astar;;) {
            a = search_up ? a + step : a - step;
            if (a >= limit_hi || a <= limit_lo)
                throw numeric_error("find_matching_alpha: no energy crossing on the opposite branch");
            double g = E(a) - E1;
            if (g > 0.0) {
                lo = std::min(prev_a, a);
                hi = std::max(prev_a, a);
                break;
            }
            prev_a = a;
            prev_g = g;
        }
    }

    // Six nodes straddling the bracket, quintic fit, Newton on the interpolant.
    const double dstep = (hi - lo);
    std::vector<double> nodes, gvals;
    for (int j = -2; j <= 3; ++j) {
        double a = std::clamp(lo + j * dstep, 1e-4, 0.9995);
        nodes.push_back(a);
        gvals.push_back(E(a) - E1);
    }
    const double center = 0.5 * (lo + hi);
    std::vector<double> V(36);
    for (int r = 0; r < 6; ++r) {
        double p = 1.0;
        for (int c = 0; c < 6; ++c) {
            V[static_cast<size_t>(r * 6 + c)] = p;
            p *= (nodes[static_cast<size_t>(r)] - center);
        }
    }
    std::vector<double> coef = solve_dense(V, gvals);
    auto poly = [&](double a) {
        double t = a - center, p = 1.0, s = 0.0;
        for (int c = 0; c < 6; ++c) {
            s += coef[static_cast<size_t>(c)] * p;
            p *= t;
        }
        return s;
    };
    auto dpoly = [&](double a) {
        double t = a - center, p = 1.0, s = 0.0;
        for (int c = 1; c < 6; ++c) {
            s += c * coef[static_cast<size_t>(c)] * p;
            p *= t;
        }
        return s;
    };
    double root = center;
    for (int it = 0; it < 60; ++it) {
        double d = dpoly(root);
        if (d == 0.0) break;
        double next = root - poly(root) / d;
        next = std::clamp(next, nodes.front(), nodes.back());
        if (std::fabs(next - root) < 1e-15) {
            root = next;
            break;
        }
        root = next;
    }

    // Secant polish on the true energy difference.
    double x0 = root, x1 = std::clamp(root + 1e-5, 1e-4, 0.9995);
    double g0 = E(x0) - E1, g1 = E(x1) - E1;
    for (int it = 0; it < 8 && g1 != g0; ++it) {
        double x2 = x1 - g1 * (x1 - x0) / (g1 - g0);
        x2 = std::clamp(x2, 1e-4, 0.9995);
        x0 = x1;
        g0 = g1;
        x1 = x2;
        g1 = E(x1) - E1;
        if (std::fabs(x1 - x0) < 1e-13) break;
    }

    MatchingAlphaResult out;
    out.alpha2 = x1;
    out.state1 = solve_canonical(q, alpha1, tol, 0);
    out.state2 = solve_canonical(q, x1, tol, 0);
    out.energy = 0.5 * (out.state1.energy + out.state2.energy);
    return out;
}

}  // namespace thinfilm
