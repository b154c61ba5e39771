#include "thinfilm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "thinfilm/spectral.hpp"
#include "thinfilm/steady.hpp"

namespace thinfilm {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kFourPiSq = 4.0 * M_PI * M_PI;
}  // namespace

double EnergyParams::potential(double y) const {
    if (!(y > 0.0)) throw std::invalid_argument("potential: height must be positive");
    if (q == 0.0) return bond * (y * std::log(y) - y);
    if (q == -1.0) return -bond * std::log(y);
    return bond * pow_real(y, q + 1.0) / (q * (q + 1.0));
}

double free_energy(const PeriodicField& h, const EnergyParams& p) {
    const int n = h.size();
    if (h.min() <= 0.0) throw std::invalid_argument("free_energy: field must be positive");
    const double dx = h.dx();
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double grad = (h.at(i + 1) - h.values[static_cast<size_t>(i)]) / dx;
        sum += 0.5 * grad * grad - p.potential(h.values[static_cast<size_t>(i)]);
    }
    return sum * dx;
}

double growth_rate(double k, double hbar, const ModelParams& params) {
    if (!(hbar > 0.0)) throw std::invalid_argument("growth_rate: hbar must be positive");
    const double k2 = k * k;
    return params.mobility(hbar) * k2 * (params.ratio(hbar) - k2);
}

double growth_factor(double k, double dt, double hbar, const ModelParams& params, double dx) {
    if (!(hbar > 0.0)) throw std::invalid_argument("growth_factor: hbar must be positive");
    if (!(dt > 0.0)) throw std::invalid_argument("growth_factor: dt must be positive");
    double k2 = k * k;
    if (dx > 0.0) {
        const double s = std::sin(0.5 * k * dx);
        k2 = 4.0 * s * s / (dx * dx);
    }
    const double mu = 0.5 * dt * params.mobility(hbar) * k2 * (k2 - params.ratio(hbar));
    return (1.0 - mu) / (1.0 + mu);
}

LandauResult landau(double q, double sigma) {
    LandauResult r;
    r.kappa = sigma / 6.0 * (q - 1.0) * (1.75 - q);
    if (q == 1.0 || q == 1.75) {
        r.type = BifurcationType::Degenerate;
        r.amplitude = kNaN;
        return r;
    }
    r.type = (q > 1.0 && q < 1.75) ? BifurcationType::Supercritical : BifurcationType::Subcritical;
    // a' = sigma a - kappa a^3 has the finite equilibrium sqrt(sigma/kappa) whenever the
    // ratio is positive: saturation (kappa > 0) or a subcritical threshold (both < 0).
    const double ratio = sigma / r.kappa;
    r.amplitude = ratio > 0.0 ? std::sqrt(ratio) : kNaN;
    return r;
}

ConstantStability constant_state_stability(double hbar, double X, const ModelParams& params) {
    if (!(hbar > 0.0) || !(X > 0.0))
        throw std::invalid_argument("constant_state_stability: hbar and X must be positive");
    const double s = params.ratio(hbar) * X * X;
    if (std::fabs(s - kFourPiSq) <= 1e-12 * kFourPiSq) return ConstantStability::Marginal;
    return s > kFourPiSq ? ConstantStability::Saddle : ConstantStability::LocalMinimum;
}

double estimate_singularity_time(double t1, double v1, double t2, double v2, double p) {
    if (!(t2 > t1)) throw std::invalid_argument("estimate_singularity_time: need t1 < t2");
    if (!(v1 > 0.0) || !(v2 > 0.0))
        throw std::invalid_argument("estimate_singularity_time: samples must be positive");
    if (p == 0.0) throw std::invalid_argument("estimate_singularity_time: exponent must be nonzero");
    const double rho = std::pow(v1 / v2, 1.0 / p);
    if (std::fabs(1.0 - rho) < 1e-14)
        throw numeric_error("estimate_singularity_time: samples show no drift");
    return (t1 - rho * t2) / (1.0 - rho);
}

PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& samples) {
    if (samples.size() < 2) throw std::invalid_argument("fit_power_law: need at least two samples");
    double su = 0.0, sv = 0.0;
    for (const auto& [u, v] : samples) {
        if (!(u > 0.0) || !(v > 0.0)) throw std::invalid_argument("fit_power_law: samples must be positive");
        su += std::log(u);
        sv += std::log(v);
    }
    const double n = static_cast<double>(samples.size());
    const double mu = su / n, mv = sv / n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [u, v] : samples) {
        const double du = std::log(u) - mu;
        sxx += du * du;
        sxy += du * (std::log(v) - mv);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_power_law: samples need distinct abscissae");
    PowerLawFit fit;
    fit.exponent = sxy / sxx;
    fit.prefactor = std::exp(mv - fit.exponent * mu);
    return fit;
}

int count_local_minima_below(const PeriodicField& f, double threshold) {
    int count = 0;
    for (int j : local_minima_indices(f.values))
        if (f.values[static_cast<size_t>(j)] < threshold) ++count;
    return count;
}

double half_time(const RunRecord& record, double level) {
    const auto& s = record.series;
    for (size_t i = 0; i + 1 < s.size(); ++i) {
        const double a = s[i].hmin - level;
        const double b = s[i + 1].hmin - level;
        if (a == 0.0) return s[i].t;
        if (a * b < 0.0 || b == 0.0)
            return s[i].t + a / (a - b) * (s[i + 1].t - s[i].t);
    }
    return kNaN;
}

namespace {

// Best translational alignment of `ref` against `field`: integer-shift scan, then a
// golden-section polish of the fractional shift using spectral translation.
std::pair<double, double> align_shift(const PeriodicField& field, const PeriodicField& ref) {
    const int n = field.size();
    const auto& fv = field.values;
    const auto& rv = ref.values;
    int best_i = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        double d = 0.0;
        for (int j = 0; j < n && d < best; ++j) {
            const int jj = j - i >= 0 ? j - i : j - i + n;
            d = std::max(d, std::fabs(fv[static_cast<size_t>(j)] - rv[static_cast<size_t>(jj)]));
        }
        if (d < best) {
            best = d;
            best_i = i;
        }
    }
    const double dx = field.dx();
    auto dist = [&](double s) { return linf_distance(field, shift_field(ref, s)); };
    double lo = best_i * dx - dx, hi = best_i * dx + dx;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = dist(x1), f2 = dist(x2);
    for (int it = 0; it < 70; ++it) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = dist(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = dist(x2);
        }
    }
    double s = best_i * dx, d = best;
    if (f1 < d) {
        d = f1;
        s = x1;
    }
    if (f2 < d) {
        d = f2;
        s = x2;
    }
    s = std::fmod(s, field.X);
    if (s < 0.0) s += field.X;
    return {d, s};
}

}  // namespace

Outcome classify_outcome(const RunRecord& record, const ClassifyReferences& refs, double tol) {
    Outcome oc = record.outcome;
    if (oc.kind == OutcomeKind::TouchDown || oc.kind == OutcomeKind::BlowUp) return oc;
    const PeriodicField& field = record.last_resolved;
    if (field.size() == 0 || record.series.empty()) return oc;

    const double hbar = refs.hbar ? *refs.hbar : mass(field) / field.X;
    double flat = 0.0;
    for (double v : field.values) flat = std::max(flat, std::fabs(v - hbar));
    if (flat < tol) {
        oc.kind = OutcomeKind::RelaxedToConstant;
        oc.value = hbar;
        oc.detail = "last resolved state is constant to tolerance";
        return oc;
    }

    if (refs.steady) {
        PeriodicField ref = *refs.steady;
        if (std::fabs(ref.X - field.X) > 1e-9 * field.X)
            throw std::invalid_argument("classify_outcome: steady reference has a different period");
        if (ref.size() != field.size()) ref = resample(ref, field.size());
        ref.X = field.X;
        auto [d, s] = align_shift(field, ref);
        if (d < tol) {
            oc.kind = OutcomeKind::RelaxedToPeriodic;
            oc.value = s;
            oc.detail = "last resolved state matches the steady reference up to translation";
            return oc;
        }
    }

    // Trend upgrades for runs cut short by dt collapse or an exhausted mesh.
    const auto& sr = record.series;
    const size_t k = std::min<size_t>(6, sr.size());
    if (k >= 3) {
        bool down = true, up = true;
        for (size_t i = sr.size() - k; i + 1 < sr.size(); ++i) {
            down = down && sr[i + 1].hmin < sr[i].hmin;
            up = up && sr[i + 1].hmax > sr[i].hmax;
        }
        if (down && sr.back().hmin < record.controls.touchdown_report) {
            oc.kind = OutcomeKind::TouchDown;
            oc.value = sr.back().hmin;
            oc.locations = touchdown_locations(field, record.controls.touchdown_report);
            oc.detail = "minimum height collapsing through the reporting level";
            return oc;
        }
        if (up && sr.back().hmax > 0.5 * record.controls.blowup_threshold) {
            oc.kind = OutcomeKind::BlowUp;
            oc.value = sr.back().hmax;
            oc.detail = "maximum height growing toward the blow-up threshold";
            return oc;
        }
    }
    return oc;
}

std::vector<BranchPoint> bifurcation_branch(double q, double bond, double target_period,
                                            const std::vector<double>& alphas, double q_upper) {
    if (alphas.empty()) throw std::invalid_argument("bifurcation_branch: empty alpha grid");
    if (!(bond > 0.0) || !(target_period > 0.0))
        throw std::invalid_argument("bifurcation_branch: bond and period must be positive");
    const bool fold = q > 1.75 && q < q_upper;
    if (fold) {
        if (alphas.size() < 2)
            throw std::invalid_argument("bifurcation_branch: fold window needs at least two alphas");
        for (size_t i = 0; i + 1 < alphas.size(); ++i)
            if (!(alphas[i] < alphas[i + 1]))
                throw std::invalid_argument("bifurcation_branch: alphas must be strictly increasing");
    }

    std::vector<BranchPoint> pts(alphas.size());
    for (size_t i = 0; i < alphas.size(); ++i) {
        CanonicalSteadyState c = solve_canonical(q, alphas[i], 1e-12, 0);
        BranchPoint& p = pts[i];
        p.alpha = alphas[i];
        p.energy = c.energy;
        const double half_range = 0.5 * (c.peak - alphas[i]);
        if (q == 1.0) {
            p.amplitude = half_range;  // linear family: amplitude is a free scale
            p.stability = BranchStability::Neutral;
        } else {
            const double s = c.period / target_period;
            p.amplitude = std::pow(s * s / bond, 1.0 / (q - 1.0)) * half_range;
        }
    }

    if (q == 1.0) return pts;
    for (size_t i = 0; i < pts.size(); ++i) {
        if (q < 1.0 || q >= q_upper) {
            pts[i].stability = BranchStability::Unstable;
        } else if (q <= 1.75) {
            pts[i].stability = BranchStability::Stable;
        } else {
            const size_t lo = i == 0 ? 0 : i - 1;
            const size_t hi = i + 1 == pts.size() ? i : i + 1;
            const double slope = (pts[hi].energy - pts[lo].energy) / (alphas[hi] - alphas[lo]);
            pts[i].stability = slope < 0.0 ? BranchStability::Stable : BranchStability::Unstable;
        }
    }
    return pts;
}

}  // namespace thinfilm
